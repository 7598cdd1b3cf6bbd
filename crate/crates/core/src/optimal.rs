//! The best model of the family for a given efficiency and visibility:
//! top-hat detectors and either a pure `1 + c cos 2x` density (when the
//! quantum curve is reachable) or a clipped cosine, plus the deviation
//! measures that follow from it.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inequalities::{RateSeries, TwoChannelRates};
use crate::model::{check_efficiency, DetectionFn, LhvModel, Monotonicity, PairDensity};
use crate::periodic::check_grid;

/// Default truncation of the harmonic sums.
pub const DEFAULT_N_MAX: usize = 400;

const BISECTION_TOL: f64 = 1e-15;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn check_visibility(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::VisibilityOutOfRange(v));
    }
    Ok(())
}

fn check_clipping(eps: f64) -> Result<()> {
    if !(0.0..PI / 4.0).contains(&eps) {
        return Err(Error::ClippingOutOfRange(eps));
    }
    Ok(())
}

/// Largest visibility reproduced exactly at efficiency `η`:
/// `sin²(πη/2)/(πη/2)²`.
pub fn v_max(eta: f64) -> Result<f64> {
    check_efficiency(eta)?;
    Ok(sinc(PI * eta / 2.0).powi(2))
}

/// `V_max` for unequal efficiencies, `C₁⁽¹⁾C₁⁽²⁾/(C₀⁽¹⁾C₀⁽²⁾)`.
pub fn v_max_pair(eta1: f64, eta2: f64) -> Result<f64> {
    check_efficiency(eta1)?;
    check_efficiency(eta2)?;
    Ok(sinc(PI * eta1 / 2.0) * sinc(PI * eta2 / 2.0))
}

/// Cosine coefficient `a_n` of the clipped density `π² ρ`.
pub fn a_coeff(eps: f64, n: usize) -> Result<f64> {
    check_clipping(eps)?;
    let t = 2.0 * eps;
    let denom = PI + t.tan() - t;
    Ok(match n {
        0 => 1.0,
        1 => ((PI - t) / t.cos() + t.sin()) / denom,
        _ => {
            let nf = n as f64;
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            2.0 / (nf * (nf * nf - 1.0)) * sign * ((nf * t).sin() - nf * t.tan() * (nf * t).cos()) / denom
        }
    })
}

/// Lowest-order small-`ε` form of [`a_coeff`].
pub fn a_coeff_leading(eps: f64, n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 1.0 + 2.0 * eps * eps - 8.0 * eps.powi(3) / PI,
        _ => {
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * 16.0 * eps.powi(3) / (3.0 * PI)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    /// `V ≤ V_max`: the quantum curve is reproduced exactly.
    Agree,
    /// `V > V_max`: the density is clipped and a residual remains.
    Deviate,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Agree => "AGREE",
            Branch::Deviate => "DEVIATE",
        })
    }
}

/// `ε` from `V = V_max a₁(ε)`, solved by bisection.
pub fn epsilon_solve(eta: f64, v: f64) -> Result<f64> {
    let vm = v_max(eta)?;
    check_visibility(v)?;
    if v <= vm {
        return Ok(0.0);
    }
    // a₁ → π/2 as ε → π/4.
    if v >= vm * PI / 2.0 {
        return Err(Error::UnreachableVisibility { eta, v });
    }
    let residual = |e: f64| vm * a_coeff(e, 1).expect("ε in range") - v;
    let (mut lo, mut hi) = (0.0, PI / 4.0 * (1.0 - 1e-15));
    if residual(hi) < 0.0 {
        return Err(Error::UnreachableVisibility { eta, v });
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Small-`ε` estimate `√((V - V_max)₊/2)`.
pub fn epsilon_leading(eta: f64, v: f64) -> Result<f64> {
    let vm = v_max(eta)?;
    check_visibility(v)?;
    Ok(((v - vm).max(0.0) / 2.0).sqrt())
}

/// Efficiency, target visibility and the clipping that together fix the
/// best model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalModelParams {
    pub eta: f64,
    pub v: f64,
    pub eps: f64,
    pub branch: Branch,
}

impl OptimalModelParams {
    pub fn new(eta: f64, v: f64) -> Result<Self> {
        let eps = epsilon_solve(eta, v)?;
        let branch = if eps > 0.0 { Branch::Deviate } else { Branch::Agree };
        Ok(Self { eta, v, eps, branch })
    }

    pub fn v_max(&self) -> f64 {
        sinc(PI * self.eta / 2.0).powi(2)
    }
}

/// Pair density of the best model, sampled on an `n`-point grid.
pub fn rho_optimal(params: &OptimalModelParams, n: usize) -> Result<PairDensity> {
    check_grid(n)?;
    match params.branch {
        Branch::Agree => {
            let c = params.v / params.v_max();
            if c > 1.0 + 1e-12 {
                return Err(Error::InternalContradiction(format!(
                    "cos 2x coefficient {c} exceeds 1 on the agreeing branch"
                )));
            }
            let f = crate::periodic::PeriodicFn::from_fn(n, |x| (1.0 + c * (2.0 * x).cos()) / (PI * PI))?;
            PairDensity::new(f, Monotonicity::Strict)
        }
        Branch::Deviate => {
            let t = 2.0 * params.eps;
            let norm = PI * (PI + t.tan() - t);
            let f = crate::periodic::PeriodicFn::from_fn(n, |x| (1.0 + (2.0 * x).cos() / t.cos()).max(0.0) / norm)?;
            // Point sampling across the kinks loses O(h²) of mass.
            PairDensity::normalized(f.into_samples(), Monotonicity::Strict)
        }
    }
}

/// Best model on an `n`-point grid: [`rho_optimal`] with top-hat detectors.
pub fn optimal_model(params: &OptimalModelParams, n: usize) -> Result<LhvModel> {
    LhvModel::symmetric(rho_optimal(params, n)?, DetectionFn::top_hat(n, params.eta)?)
}

/// Residual `δ(φ)` of the coincidence curve, closed form to `O(ε³)`.
/// The step at `|φ| = (π/2)(1 - η)` is taken as included.
pub fn delta_closed(phi: f64, eta: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    let phi = crate::periodic::wrap_half_period(phi).abs();
    let vm = sinc(PI * eta / 2.0).powi(2);
    let step = if phi >= PI / 2.0 * (1.0 - eta) {
        2.0 / (eta * eta) * (eta + 2.0 * phi / PI - 1.0)
    } else {
        0.0
    };
    8.0 * eps.powi(3) / (3.0 * PI) * (2.0 * vm * (2.0 * phi).cos() - 1.0 + step)
}

/// Which coefficients enter a harmonic sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientForm {
    Exact,
    Leading,
}

/// Which `ε` enters a harmonic sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonChoice {
    /// Root of the exact visibility relation.
    Exact,
    /// The `√((V - V_max)/2)` estimate.
    Leading,
}

/// Harmonic amplitudes of
/// `δ(φ) = Σ_{n≥2} a_n sinc(nπη₁/2) sinc(nπη₂/2) cos 2nφ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSeries {
    /// `terms[n]` multiplies `cos 2nφ`; entries 0 and 1 are zero.
    terms: Vec<f64>,
}

impl DeltaSeries {
    pub fn new(eta: f64, eps: f64, n_max: usize, form: CoefficientForm) -> Result<Self> {
        Self::with_efficiencies(eta, eta, eps, n_max, form)
    }

    pub fn with_efficiencies(eta1: f64, eta2: f64, eps: f64, n_max: usize, form: CoefficientForm) -> Result<Self> {
        check_efficiency(eta1)?;
        check_efficiency(eta2)?;
        check_clipping(eps)?;
        if n_max < 2 {
            return Err(Error::InsufficientResolution(format!("n_max = {n_max} < 2")));
        }
        let mut terms = vec![0.0; n_max + 1];
        for (n, t) in terms.iter_mut().enumerate().skip(2) {
            let a = match form {
                CoefficientForm::Exact => a_coeff(eps, n)?,
                CoefficientForm::Leading => a_coeff_leading(eps, n),
            };
            let nf = n as f64;
            *t = a * sinc(nf * PI * eta1 / 2.0) * sinc(nf * PI * eta2 / 2.0);
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[f64] {
        &self.terms
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .skip(2)
            .map(|(n, t)| t * (2.0 * n as f64 * phi).cos())
            .sum()
    }

    /// `√((1/π) ∫ δ² dφ)` from Parseval.
    pub fn rms(&self) -> f64 {
        (0.5 * self.terms.iter().map(|t| t * t).sum::<f64>()).sqrt()
    }
}

/// `δ(φ)` from the harmonic sum with exact coefficients.
pub fn delta_series(phi: f64, eta: f64, eps: f64, n_max: usize) -> Result<f64> {
    Ok(DeltaSeries::new(eta, eps, n_max, CoefficientForm::Exact)?.eval(phi))
}

/// How `D(η, V)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviationMethod {
    /// The `(V - V_max)^{3/2}` closed form.
    Closed,
    /// RMS of the harmonic sum.
    Series {
        epsilon: EpsilonChoice,
        coefficients: CoefficientForm,
        n_max: usize,
    },
}

/// RMS deviation `D(η, V)` of the best model from the quantum curve,
/// closed form.
pub fn deviation_d(eta: f64, v: f64) -> Result<f64> {
    deviation_d_with(eta, v, DeviationMethod::Closed)
}

pub fn deviation_d_with(eta: f64, v: f64, method: DeviationMethod) -> Result<f64> {
    let eps = epsilon_solve(eta, v)?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    match method {
        DeviationMethod::Closed => {
            let vm = v_max(eta)?;
            let shape = 2.0 / (3.0 * eta) - 0.5 - vm * vm;
            Ok(4.0 / (3.0 * PI) * shape.sqrt() * (v - vm).powf(1.5))
        }
        DeviationMethod::Series {
            epsilon,
            coefficients,
            n_max,
        } => {
            let e = match epsilon {
                EpsilonChoice::Exact => eps,
                EpsilonChoice::Leading => epsilon_leading(eta, v)?,
            };
            Ok(DeltaSeries::new(eta, e, n_max, coefficients)?.rms())
        }
    }
}

/// `D` for unequal efficiencies: harmonic sum with exact coefficients at
/// the small-`ε` estimate (which is how the closed form is built).
pub fn deviation_d_pair(eta1: f64, eta2: f64, v: f64) -> Result<f64> {
    let vm = v_max_pair(eta1, eta2)?;
    check_visibility(v)?;
    if v <= vm {
        return Ok(0.0);
    }
    if v >= vm * PI / 2.0 {
        return Err(Error::UnreachableVisibility { eta: eta1.min(eta2), v });
    }
    let eps = ((v - vm) / 2.0).sqrt();
    if eps >= PI / 4.0 {
        return Err(Error::UnreachableVisibility { eta: eta1.min(eta2), v });
    }
    Ok(DeltaSeries::with_efficiencies(eta1, eta2, eps, DEFAULT_N_MAX, CoefficientForm::Exact)?.rms())
}

/// Normalized coincidence curve `1 + V cos 2φ + δ(φ)` of the best model.
fn curve(params: &OptimalModelParams) -> Result<impl Fn(f64) -> f64> {
    let delta = DeltaSeries::new(params.eta, params.eps, DEFAULT_N_MAX, CoefficientForm::Exact)?;
    let v = params.v;
    Ok(move |phi: f64| 1.0 + v * (2.0 * phi).cos() + delta.eval(phi))
}

/// Per-pair coincidence probability of the best model at each of
/// `φ_j = jπ/n`.
pub fn predict_rates(params: &OptimalModelParams, n_angles: usize) -> Result<RateSeries> {
    let p = curve(params)?;
    let scale = params.eta * params.eta / 4.0;
    let rates = (0..n_angles)
        .map(|j| scale * p(j as f64 * PI / n_angles as f64))
        .collect();
    RateSeries::new(rates, None)
}

/// Four-channel prediction with `P₋(x) = P₊(x + π/2)`:
/// `R₊₊ = R₋₋ = R(φ)` and `R₊₋ = R₋₊ = R(φ + π/2)`.
pub fn predict_two_channel(params: &OptimalModelParams, n_angles: usize) -> Result<TwoChannelRates> {
    let p = curve(params)?;
    let scale = params.eta * params.eta / 4.0;
    let at = |shift: f64| -> Result<RateSeries> {
        RateSeries::new(
            (0..n_angles)
                .map(|j| scale * p(j as f64 * PI / n_angles as f64 + shift))
                .collect(),
            None,
        )
    };
    let same = at(0.0)?;
    let cross = at(PI / 2.0)?;
    TwoChannelRates::new(same.clone(), cross.clone(), cross, same)
}

/// The order-unity constants implied by the best model's visibility gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpliedK {
    /// From `V_B - V_A = (20√2/3π) K (V - V_max)^{3/2}`.
    pub from_contrast_gap: f64,
    /// From `V_B - V = (4√2/3π) K (V - V_max)^{3/2}`, with `V` the fitted
    /// visibility.
    pub from_fit_gap: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub v_fit: f64,
}

pub fn implied_k(params: &OptimalModelParams, n_angles: usize) -> Result<ImpliedK> {
    if params.branch == Branch::Agree {
        return Err(Error::InadmissibleModel("no visibility gap on the agreeing branch".into()));
    }
    let rates = predict_rates(params, n_angles)?;
    let (v_a, v_b) = crate::inequalities::visibilities(&rates)?;
    let v_fit = crate::inequalities::v_fit(&rates)?;
    let excess = (params.v - params.v_max()).powf(1.5);
    Ok(ImpliedK {
        from_contrast_gap: (v_b - v_a) / (20.0 * SQRT_2 / (3.0 * PI) * excess),
        from_fit_gap: (v_b - v_fit) / (4.0 * SQRT_2 / (3.0 * PI) * excess),
        v_a,
        v_b,
        v_fit,
    })
}
