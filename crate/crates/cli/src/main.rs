mod config;
mod data;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lhvbell::inequalities::{
    analyze, analyze_two_channel, fourier_b, nonideal_bound, AnalysisOptions, Efficiency, TestReport, Verdict,
};
use lhvbell::model::{Arm, LhvModel};
use lhvbell::montecarlo::{simulate, SimConfig, SimMethod, SimMode};
use lhvbell::optimal::{
    deviation_d, epsilon_leading, optimal_model, predict_rates, v_max, CoefficientForm, DeltaSeries,
    OptimalModelParams, DEFAULT_N_MAX,
};
use lhvbell::periodic::{grid_size_from_env, grid_x};
use serde::Serialize;
use serde_json::json;

use config::{parse_angles, ModeName, RunConfig};
use data::Dataset;

/// Bad input: parameters out of range, malformed files. Exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

const EXIT_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_VIOLATES: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;

#[derive(Parser)]
#[command(name = "lhvbell", version, about = "Local hidden-variable bounds for photon polarization correlation tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold visibility and the deviation bound D for given efficiencies.
    Bound(BoundArgs),
    /// Write the best model's curves as CSV plus a JSON summary.
    Model(ModelArgs),
    /// Simulate counts from a JSON config.
    Simulate(SimulateArgs),
    /// Test measured counts or rates against the local model family.
    Analyze(AnalyzeArgs),
    /// Run the numerical self-checks.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    /// Efficiency of arm 1, for the bound without rotational symmetry.
    #[arg(long, requires_all = ["eta2", "vmax_obs", "vmin_obs"], conflicts_with_all = ["eta", "v"])]
    eta1: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
    /// Largest observed visibility V_M.
    #[arg(long)]
    vmax_obs: Option<f64>,
    /// Smallest observed visibility V_m.
    #[arg(long)]
    vmin_obs: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    v: f64,
    /// Angles for the predicted rate table and b_k.
    #[arg(long, default_value_t = 16)]
    n_angles: usize,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value = "model_out")]
    out: PathBuf,
    /// Also write the four channel curves.
    #[arg(long)]
    two_channel: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Counts CSV; the resolved config is written next to it as `<out>.config.json`.
    #[arg(long, default_value = "counts.csv")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pairs: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    /// Comma-separated analyzer angles.
    #[arg(long)]
    angles: Option<String>,
    /// Angles on the command line are in degrees.
    #[arg(long)]
    degrees: bool,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    two_channel: bool,
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Events,
    Multinomial,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Counts or rates CSV.
    #[arg(long, required_unless_present = "bound_only")]
    data: Option<PathBuf>,
    /// Simulation config supplying eta, v and accidental_rate.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    /// Efficiency of arm 2, if different.
    #[arg(long)]
    eta2: Option<f64>,
    /// Visibility for D instead of the fitted one.
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    accidental_rate: Option<f64>,
    /// Resampling replicas for the error on Δ_min.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail unless V_A and V_B can be formed.
    #[arg(long)]
    visibilities: bool,
    /// Decide feasibility from published visibilities only.
    #[arg(long, requires_all = ["vmax_obs", "vmin_obs"])]
    bound_only: bool,
    #[arg(long)]
    vmax_obs: Option<f64>,
    #[arg(long)]
    vmin_obs: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    grid: Option<usize>,
    /// Also write a table of D over an (η, V) grid.
    #[arg(long, num_args = 0..=1, default_missing_value = "d_sweep.csv")]
    sweep: Option<PathBuf>,
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn grid_or_env(grid: Option<usize>) -> Result<usize> {
    match grid {
        Some(n) => Ok(n),
        None => Ok(grid_size_from_env()?),
    }
}

fn cmd_bound(args: BoundArgs) -> Result<u8> {
    if let (Some(e1), Some(e2), Some(vm), Some(vn)) = (args.eta1, args.eta2, args.vmax_obs, args.vmin_obs) {
        let b = nonideal_bound(e1, e2, vm, vn)?;
        emit(
            &json!({"eta1": e1, "eta2": e2, "vmax_obs": vm, "vmin_obs": vn, "bound": b.bound,
                    "violated": b.violated, "small_eta_bound": b.small_eta_bound}),
            args.out.as_deref(),
        )?;
        return Ok(0);
    }
    let (Some(eta), Some(v)) = (args.eta, args.v) else {
        bail!(InputError("give --eta and --v, or --eta1 --eta2 --vmax-obs --vmin-obs".into()));
    };
    let p = OptimalModelParams::new(eta, v)?;
    emit(
        &json!({"eta": eta, "v": v, "v_max": p.v_max(), "eps": p.eps, "eps_leading": epsilon_leading(eta, v)?,
                "branch": p.branch, "d": deviation_d(eta, v)?}),
        args.out.as_deref(),
    )?;
    Ok(0)
}

fn cmd_model(args: ModelArgs) -> Result<u8> {
    let n = grid_or_env(args.grid)?;
    let params = OptimalModelParams::new(args.eta, args.v)?;
    let model = optimal_model(&params, n)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let x: Vec<f64> = (0..n).map(|i| grid_x(n, i)).collect();
    let scale = args.eta * args.eta / 4.0;
    let series = DeltaSeries::new(args.eta, params.eps, DEFAULT_N_MAX, CoefficientForm::Exact)?;

    data::write_columns(&args.out.join("rho.csv"), &["x_rad", "rho"], &[x.clone(), model.rho().function().samples().to_vec()])?;
    data::write_columns(&args.out.join("detection.csv"), &["x_rad", "p"], &[x.clone(), model.p1().function().samples().to_vec()])?;
    let p12: Vec<f64> = x.iter().map(|phi| model.coincidence_prob(*phi)).collect();
    let qm: Vec<f64> = x.iter().map(|phi| scale * (1.0 + args.v * (2.0 * phi).cos())).collect();
    data::write_columns(&args.out.join("p12.csv"), &["phi_rad", "p12", "p12_qm"], &[x.clone(), p12.clone(), qm.clone()])?;
    let delta: Vec<f64> = p12.iter().zip(&qm).map(|(a, b)| (a - b) / scale).collect();
    let delta_series: Vec<f64> = x.iter().map(|phi| series.eval(*phi)).collect();
    data::write_columns(&args.out.join("delta.csv"), &["phi_rad", "delta", "delta_series"], &[x.clone(), delta, delta_series])?;

    if args.two_channel {
        let minus = model.p1().orthogonal();
        let rho = model.rho().clone();
        let pair = |a, b| LhvModel::new(rho.clone(), a, b);
        let models = [
            model.clone(),
            pair(model.p1().clone(), minus.clone())?,
            pair(minus.clone(), model.p2().clone())?,
            pair(minus.clone(), minus)?,
        ];
        let cols: Vec<Vec<f64>> = std::iter::once(x.clone())
            .chain(models.iter().map(|m| x.iter().map(|phi| m.coincidence_prob(*phi)).collect()))
            .collect();
        data::write_columns(&args.out.join("channels.csv"), &["phi_rad", "p_pp", "p_pm", "p_mp", "p_mm"], &cols)?;
    }

    let rates = predict_rates(&params, args.n_angles)?;
    let b = if args.n_angles.is_multiple_of(2) && args.n_angles >= 4 { fourier_b(&rates)? } else { Vec::new() };
    let summary = json!({
        "eta": args.eta, "v": args.v, "eps": params.eps, "branch": params.branch, "v_max": params.v_max(),
        "d": deviation_d(args.eta, args.v)?, "b": b, "singles": model.singles_prob(Arm::One),
        "config_echo": {"eta": args.eta, "v": args.v, "n_angles": args.n_angles, "grid": n, "two_channel": args.two_channel},
    });
    emit(&summary, Some(&args.out.join("summary.json")))?;
    eprintln!("wrote model curves to {}", args.out.display());
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = args.pairs {
        cfg.pairs = p;
    }
    if let Some(e) = args.eta {
        cfg.eta = e;
    }
    if let Some(v) = args.v {
        cfg.v = v;
    }
    if let Some(raw) = &args.angles {
        cfg.angles = Some(parse_angles(raw, args.degrees)?);
        cfg.n_angles = None;
    }
    if let Some(m) = args.method {
        cfg.method = match m {
            MethodArg::Events => SimMethod::Events,
            MethodArg::Multinomial => SimMethod::Multinomial,
        };
    }
    if args.two_channel {
        cfg.two_channel = true;
    }
    if args.grid.is_some() {
        cfg.grid = args.grid;
    }
    let cfg = cfg.resolve()?;
    let params = OptimalModelParams::new(cfg.eta, cfg.v)?;
    let mode = match cfg.mode {
        ModeName::Qm => SimMode::Qm { eta: cfg.eta, v: cfg.v },
        ModeName::Lhv => SimMode::Lhv(optimal_model(&params, cfg.grid())?),
    };
    let sim = SimConfig {
        pairs: cfg.pairs,
        angles: cfg.angles().to_vec(),
        seed: cfg.seed,
        mode,
        two_channel: cfg.two_channel,
        method: cfg.method,
    };
    let counts = simulate(&sim)?;
    let echo = serde_json::to_string(&cfg)?;
    data::write_counts(&args.out, &counts, &format!("pairs per angle: {}\nconfig: {echo}", cfg.pairs))?;
    let mut side = args.out.clone().into_os_string();
    side.push(".config.json");
    emit(&cfg, Some(Path::new(&side)))?;
    eprintln!("wrote {} angles x {} pairs to {}", cfg.angles().len(), cfg.pairs, args.out.display());
    Ok(0)
}

#[derive(Serialize)]
struct AnalyzeReport {
    #[serde(flatten)]
    report: TestReport,
    config_echo: serde_json::Value,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<u8> {
    let file = args.config.as_deref().map(RunConfig::load).transpose()?;
    let eta = args
        .eta
        .or(file.as_ref().map(|c| c.eta))
        .ok_or_else(|| InputError("--eta is required (or a --config giving eta)".into()))?;

    if args.bound_only {
        let (vm, vn) = (args.vmax_obs.unwrap_or_default(), args.vmin_obs.unwrap_or_default());
        let eta2 = args.eta2.unwrap_or(eta);
        let thresh = v_max(eta)?;
        let nonideal = nonideal_bound(eta, eta2, vm, vn)?;
        let d_vm = deviation_d(eta, vm)?;
        let out = json!({
            "v_max": thresh, "vmax_obs": vm, "vmin_obs": vn,
            "d_at_vmax_obs": d_vm, "d_at_vmin_obs": deviation_d(eta, vn)?,
            "nonideal_bound": nonideal.bound, "nonideal_violated": nonideal.violated,
            "test_possible": d_vm > 0.0,
            "config_echo": {"eta": eta, "eta2": eta2, "vmax_obs": vm, "vmin_obs": vn},
        });
        emit(&out, args.out.as_deref())?;
        eprintln!(
            "V_max({eta}) = {thresh:.6}; observed V_M = {vm} {} the threshold, so the rate test {} discriminate",
            if vm > thresh { "exceeds" } else { "does not exceed" },
            if d_vm > 0.0 { "can" } else { "cannot" }
        );
        return Ok(0);
    }

    let path = args.data.as_deref().expect("clap requires --data");
    let efficiency = match args.eta2 {
        Some(e2) => Efficiency::Pair(eta, e2),
        None => Efficiency::Single(eta),
    };
    let options = AnalysisOptions {
        v_override: args.v,
        accidental_rate: args.accidental_rate.or(file.as_ref().and_then(|c| c.accidental_rate)),
        bootstrap: args.bootstrap.map(|k| (k, args.seed)),
    };
    let report = match data::read_dataset(path)? {
        Dataset::Single(r) => analyze(&r, efficiency, &options)?,
        Dataset::TwoChannel(tc) => analyze_two_channel(&tc, efficiency, &options)?,
    };
    if args.visibilities && (report.v_a.is_none() || report.v_b.is_none()) {
        bail!(InputError(format!(
            "visibilities need rates at 0, π/8, π/4 multiples; {} angles given",
            report.n_angles
        )));
    }
    let verdict = report.verdict;
    eprintln!(
        "Δ_min = {:.4e} ± {} vs D = {:.4e} (V = {:.5}, branch {}): {verdict}",
        report.delta_min,
        report.sigma_delta_min.map_or("n/a".into(), |s| format!("{s:.2e}")),
        report.d_bound,
        report.v_used,
        report.branch
    );
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    let echo = json!({
        "data": path, "eta": eta, "eta2": args.eta2, "v": args.v, "accidental_rate": options.accidental_rate,
        "bootstrap": args.bootstrap, "seed": args.seed, "config": args.config,
    });
    emit(&AnalyzeReport { report, config_echo: echo }, args.out.as_deref())?;
    Ok(match verdict {
        Verdict::ConsistentWithLhvFamily => 0,
        Verdict::ViolatesLhvFamily => EXIT_VIOLATES,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn cmd_validate(args: ValidateArgs) -> Result<u8> {
    let grid = grid_or_env(args.grid)?;
    let checks = validate::run(grid)?;
    emit(&json!({"grid": grid, "checks": checks}), None)?;
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!("FAILED {}: {:.3e} > {:.1e}{}", c.name, c.measured, c.tolerance,
            c.message.as_deref().map_or(String::new(), |m| format!(" ({m})")));
    }
    if let Some(path) = &args.sweep {
        validate::write_sweep(path)?;
        eprintln!("wrote D sweep to {}", path.display());
    }
    Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_FAILURE })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InputError>().is_some() {
        return EXIT_INPUT;
    }
    match err.downcast_ref::<lhvbell::Error>() {
        Some(lhvbell::Error::NotConverged { .. } | lhvbell::Error::InternalContradiction(_)) => EXIT_FAILURE,
        Some(_) => EXIT_INPUT,
        None => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Model(a) => cmd_model(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
