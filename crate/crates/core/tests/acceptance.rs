//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use lhvbell::inequalities::{
    analyze, correlation_e, delta_min, four_angle_ratio, fourier_b, s_param, v_fit, visibilities, AnalysisOptions,
    Efficiency, RateSeries, TwoChannelRates, Verdict,
};
use lhvbell::model::{DetectionFn, LhvModel, Monotonicity, PairDensity};
use lhvbell::montecarlo::{equally_spaced, simulate, SimConfig, SimMethod, SimMode};
use lhvbell::optimal::{
    delta_closed, deviation_d_with, epsilon_leading, optimal_model, rho_optimal, v_max,
    CoefficientForm, DeltaSeries, DeviationMethod, EpsilonChoice, OptimalModelParams, DEFAULT_N_MAX,
};
use lhvbell::variational::{objective_s, relative_l2, solve, VariationalProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn threshold() -> Outcome {
    let eta = 0.214;
    let x = PI * eta / 2.0;
    let oracle = x.sin().powi(2) / (x * x);
    let vm = v_max(eta).unwrap();
    let ok = [0.970, 0.982].iter().all(|obs| vm < *obs) && (vm - oracle).abs() < 1e-12 && (vm - 0.9628).abs() < 1e-4;
    (ok, format!("v_max(0.214) = {vm:.7}, direct sin²/x² = {oracle:.7}"))
}

fn agreement() -> Outcome {
    let n = 2048;
    let etas = [0.05, 0.1, 0.2, 0.214, 0.3, 0.45, 0.6, 0.8, 0.95, 1.0];
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for eta in etas {
        let vm = v_max(eta).unwrap();
        for frac in [0.5, 1.0] {
            let v = vm * frac;
            let model = optimal_model(&OptimalModelParams::new(eta, v).unwrap(), n).unwrap();
            for j in 0..360 {
                let phi = j as f64 * PI / 360.0;
                let qm = eta * eta / 4.0 * (1.0 + v * (2.0 * phi).cos());
                worst = worst.max((model.coincidence_prob(phi) - qm).abs());
            }
            points += 1;
        }
    }
    (worst < 1e-6, format!("{points} points, max |p12 - QM| = {worst:.2e} (tol 1e-6)"))
}

fn deviation() -> Outcome {
    let mut worst_d: f64 = 0.0;
    let mut worst_d_exact_eps: f64 = 0.0;
    let mut worst_delta: f64 = 0.0;
    let mut worst_delta_leading: f64 = 0.0;
    let mut count = 0;
    for eta in [0.1, 0.2, 0.3] {
        for v in [0.97, 0.98, 0.99] {
            if v <= v_max(eta).unwrap() {
                continue;
            }
            count += 1;
            let closed = deviation_d_with(eta, v, DeviationMethod::Closed).unwrap();
            let series = |epsilon| {
                deviation_d_with(
                    eta,
                    v,
                    DeviationMethod::Series {
                        epsilon,
                        coefficients: CoefficientForm::Exact,
                        n_max: DEFAULT_N_MAX,
                    },
                )
                .unwrap()
            };
            worst_d = worst_d.max((series(EpsilonChoice::Leading) / closed - 1.0).abs());
            worst_d_exact_eps = worst_d_exact_eps.max((series(EpsilonChoice::Exact) / closed - 1.0).abs());
            let eps = epsilon_leading(eta, v).unwrap();
            if eps <= 0.1 {
                let phis: Vec<f64> = (0..2000).map(|j| -PI / 2.0 + j as f64 * PI / 2000.0).collect();
                let peak = phis.iter().map(|p| delta_closed(*p, eta, eps).abs()).fold(0.0, f64::max);
                let err = |form| {
                    let ds = DeltaSeries::new(eta, eps, DEFAULT_N_MAX, form).unwrap();
                    phis.iter()
                        .map(|p| (ds.eval(*p) - delta_closed(*p, eta, eps)).abs())
                        .fold(0.0, f64::max)
                        / peak
                };
                worst_delta = worst_delta.max(err(CoefficientForm::Exact));
                worst_delta_leading = worst_delta_leading.max(err(CoefficientForm::Leading));
            }
        }
    }
    (
        worst_d < 0.05 && worst_delta < 0.02,
        format!(
            "{count} points; D series vs closed max rel {worst_d:.3} (tol 0.05; {worst_d_exact_eps:.3} with exact ε); δ series vs closed max {:.1}% of peak (tol 2%; {:.2}% with leading-order a_n)",
            100.0 * worst_delta,
            100.0 * worst_delta_leading
        ),
    )
}

fn variational() -> Outcome {
    let n = 1024;
    let mut ok = true;
    let mut parts = Vec::new();
    for (eta, v) in [(0.2, 0.9), (0.2, 0.98)] {
        let params = OptimalModelParams::new(eta, v).unwrap();
        let problem = VariationalProblem::new(DetectionFn::top_hat(n, eta).unwrap(), eta, v).unwrap();
        let scale = (eta * eta / 4.0_f64).powi(2);
        let reference = rho_optimal(&params, n).unwrap();
        let s_ref = objective_s(&reference, &problem).unwrap() / scale;
        let sol = match solve(&problem) {
            Ok(s) => s,
            Err(e) => return (false, format!("solver failed at ({eta}, {v}): {e}")),
        };
        let gap = (sol.s_scaled - s_ref).abs();
        ok &= gap < 1e-6;
        let mut part = format!(
            "({eta}, {v}) S_min {:.3e} vs analytic {:.3e}, gap {gap:.1e} (tol 1e-6)",
            sol.s_scaled, s_ref
        );
        if params.eps > 0.0 {
            let samples = sol.rho.function().samples();
            let floor = 1e-6 * samples.iter().cloned().fold(0.0, f64::max);
            let edge = (0..n)
                .filter(|i| samples[*i] > floor)
                .map(|i| (-PI / 2.0 + i as f64 * PI / n as f64).abs())
                .fold(0.0, f64::max);
            let eps_rec = PI / 2.0 - edge;
            let shape = relative_l2(sol.rho.function(), reference.function(), 0.0);
            ok &= (eps_rec - params.eps).abs() < 1e-3;
            part += &format!(
                ", recovered ε {eps_rec:.4} vs {:.4} (tol 1e-3), L² shape distance {shape:.3}",
                params.eps
            );
        }
        parts.push(part);
    }
    (ok, parts.join("; "))
}

fn discrimination() -> Outcome {
    let (eta, v, runs) = (0.2, 0.98, 100);
    let params = OptimalModelParams::new(eta, v).unwrap();
    let model = optimal_model(&params, 2048).unwrap();
    let tally = |mode: SimMode, want: Verdict, pairs: u64| {
        let mut hits = 0;
        let mut sigmas = Vec::new();
        let mut dmins = Vec::new();
        for seed in 0..runs {
            let config = SimConfig {
                pairs,
                angles: equally_spaced(16),
                seed,
                mode: mode.clone(),
                two_channel: false,
                method: SimMethod::Multinomial,
            };
            let rates = simulate(&config).unwrap().rate_series().unwrap();
            let report = analyze(&rates, Efficiency::Single(eta), &AnalysisOptions::default()).unwrap();
            hits += (report.verdict == want) as usize;
            sigmas.push(report.sigma_delta_min.unwrap_or(f64::NAN));
            dmins.push(report.delta_min);
        }
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        (hits, mean(&sigmas), mean(&dmins))
    };
    let d = lhvbell::optimal::deviation_d(eta, v).unwrap();
    let qm = SimMode::Qm { eta, v };
    let lhv = SimMode::Lhv(model);
    let (qm_hits, qm_sigma, qm_dmin) = tally(qm.clone(), Verdict::ViolatesLhvFamily, 10_000_000);
    let (lhv_hits, lhv_sigma, lhv_dmin) = tally(lhv.clone(), Verdict::ConsistentWithLhvFamily, 10_000_000);
    // Same protocol with a hundred times more pairs, for comparison only.
    let (qm_big, _, _) = tally(qm, Verdict::ViolatesLhvFamily, 1_000_000_000);
    let (lhv_big, _, _) = tally(lhv, Verdict::ConsistentWithLhvFamily, 1_000_000_000);
    (
        qm_hits >= 95 && lhv_hits >= 95,
        format!(
            "D = {d:.2e}; QM: {qm_hits}/{runs} VIOLATES (mean Δ_min {qm_dmin:.2e}, σ {qm_sigma:.2e}); LHV: {lhv_hits}/{runs} CONSISTENT (mean Δ_min {lhv_dmin:.2e}, σ {lhv_sigma:.2e}); need ≥ 95 each; at 1e9 pairs: {qm_big}/{runs} and {lhv_big}/{runs}"
        ),
    )
}

fn four_angle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for _ in 0..1000 {
        // Rates at 0, π/4, π/2; the rate at 3π/4 equals the one at π/4.
        let half: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..10.0)).collect();
        let series = RateSeries::from_half(4, half.clone(), None).unwrap();
        let dm = delta_min(&series).unwrap();
        worst = worst.max((dm - four_angle_ratio(&series).unwrap().abs()).abs());
        let mut full = half;
        full.push(rng.random_range(0.01..10.0));
        let raw = RateSeries::new(full, None).unwrap();
        asym = asym.max((delta_min(&raw).unwrap() - four_angle_ratio(&raw).unwrap().abs()).abs());
    }
    (
        worst <= 1e-12,
        format!("1000 vectors, max |Δ_min - |ratio|| = {worst:.1e} (tol 1e-12); without the R(3π/4) = R(π/4) symmetry: {asym:.2}"),
    )
}

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> LhvModel {
    let mut half: Vec<f64> = (0..=n / 2).map(|_| rng.random_range(0.0..1.0)).collect();
    half[0] += 0.1;
    let samples: Vec<f64> = (0..n).map(|i| half[i.min(n - i)]).collect();
    let rho = PairDensity::normalized(samples, Monotonicity::Relaxed).unwrap();
    let mut detector = || {
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum::<f64>() * rng.random_range(1.0..3.0);
        DetectionFn::from_fn(
            n,
            move |x| w.iter().enumerate().map(|(k, c)| c * x.cos().powi(2 * k as i32 + 2)).sum::<f64>() / total,
            Monotonicity::Strict,
        )
        .unwrap()
    };
    let (p1, p2) = (detector(), detector());
    LhvModel::new(rho, p1, p2).unwrap()
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut norm_err: f64 = 0.0;
    let mut sum_rule: f64 = 0.0;
    for _ in 0..50 {
        let model = random_model(&mut rng, 512);
        norm_err = norm_err.max((model.rho().function().integrate() - 1.0 / PI).abs());
        let mean_p12 = model.coincidence_curve().integrate() / PI;
        let singles = model.singles_prob(lhvbell::model::Arm::One) * model.singles_prob(lhvbell::model::Arm::Two);
        sum_rule = sum_rule.max((mean_p12 - singles).abs());
    }

    let mut scale_err: f64 = 0.0;
    for _ in 0..200 {
        let n = 2 * rng.random_range(2..12);
        let series = RateSeries::new((0..n).map(|_| rng.random_range(0.1..5.0)).collect(), None).unwrap();
        let c = 10f64.powf(rng.random_range(-6.0..6.0));
        let scaled = series.scaled(c);
        let mut diff = |a: f64, b: f64| scale_err = scale_err.max((a - b).abs() / a.abs().max(1.0));
        diff(delta_min(&series).unwrap(), delta_min(&scaled).unwrap());
        diff(v_fit(&series).unwrap(), v_fit(&scaled).unwrap());
        for (a, b) in fourier_b(&series).unwrap().iter().zip(fourier_b(&scaled).unwrap()) {
            diff(*a, b);
        }
        if n % 8 == 0 {
            let (a1, b1) = visibilities(&series).unwrap();
            let (a2, b2) = visibilities(&scaled).unwrap();
            diff(a1, a2);
            diff(b1, b2);
        }
        if n % 4 == 0 {
            diff(four_angle_ratio(&series).unwrap(), four_angle_ratio(&scaled).unwrap());
        }
    }

    let params = OptimalModelParams::new(0.2, 0.98).unwrap();
    let config = SimConfig {
        pairs: 2_500_000,
        angles: equally_spaced(8),
        seed: 2024,
        mode: SimMode::Lhv(optimal_model(&params, 1024).unwrap()),
        two_channel: true,
        method: SimMethod::Events,
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| serde_json::to_vec(&simulate(&config).unwrap()).unwrap())
    };
    let identical = run(1) == run(4);

    (
        norm_err < 1e-8 && sum_rule < 1e-8 && scale_err <= 1e-12 && identical,
        format!(
            "∫ρ err {norm_err:.1e}, ⟨p12⟩ - p1p2 err {sum_rule:.1e} (tol 1e-8); scale err {scale_err:.1e} (tol 1e-12); 1 vs 4 workers identical: {identical}"
        ),
    )
}

fn two_channel() -> Outcome {
    let (eta, v) = (0.2, 0.98);
    let params = OptimalModelParams::new(eta, v).unwrap();
    let n = 2048;
    let model = optimal_model(&params, n).unwrap();
    let minus = model.p1().orthogonal();
    let cross = LhvModel::new(model.rho().clone(), model.p1().clone(), minus.clone()).unwrap();
    let swapped = LhvModel::new(model.rho().clone(), minus.clone(), model.p2().clone()).unwrap();
    let both = LhvModel::new(model.rho().clone(), minus.clone(), minus).unwrap();
    let angles = 16;
    let series = |m: &LhvModel| {
        RateSeries::new(equally_spaced(angles).iter().map(|p| m.coincidence_prob(*p)).collect(), None).unwrap()
    };
    let tc = TwoChannelRates::new(series(&model), series(&cross), series(&swapped), series(&both)).unwrap();
    let s = s_param(&tc).unwrap();
    let (_, v_b) = visibilities(&tc.pp().clone()).unwrap();
    let s_err = (s - 2.0 * SQRT_2 * v_b).abs();

    let delta = DeltaSeries::new(eta, params.eps, DEFAULT_N_MAX, CoefficientForm::Exact).unwrap();
    let e_err = equally_spaced(angles)
        .iter()
        .map(|phi| {
            let e = correlation_e(&tc, *phi).unwrap();
            (e - (v * (2.0 * phi).cos() - delta.eval(PI / 2.0 + phi))).abs()
        })
        .fold(0.0, f64::max);
    // Quadrature error of the model itself, for scale.
    let quad = equally_spaced(angles)
        .iter()
        .map(|phi| (model.coincidence_prob(*phi) / (eta * eta / 4.0) - 1.0 - v * (2.0 * phi).cos() - delta.eval(*phi)).abs())
        .fold(0.0, f64::max);
    let tol = 1e-6;
    (
        s_err < 1e-10 && e_err < tol,
        format!(
            "|S - 2√2 V_B| = {s_err:.1e} (tol 1e-10); max |E - (V cos2φ - δ(π/2+φ))| = {e_err:.1e} (tol {tol:.0e}, model quadrature error {quad:.1e})"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("threshold reproduction", threshold),
        ("perfect-agreement branch", agreement),
        ("deviation cross-validation", deviation),
        ("variational optimality", variational),
        ("statistical discrimination", discrimination),
        ("four-angle identity", four_angle),
        ("property suites", properties),
        ("two-channel consistency", two_channel),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        println!(
            "criterion {} [{name}]: {} ({:.1} s) {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        failed += (!ok) as usize;
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
