//! Command-line front end.
//!
//! Every subcommand accepts `--config file.json` whose keys mirror the long
//! flags (underscored); flags given on the command line take precedence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::ensemble::{ensemble_study, EnsembleStudyConfig};
use super::ewmin::{ew_min_config, ew_min_search_state};
use super::sweep::{linspace, theta_sweep, SweepConfig};
use crate::bsm::{self, ShotRecord, ShotSettings, VisibilityModel};
use crate::circuits::{build_ansatz, NoiseModel};
use crate::detection::{
    detect_exact_ppt, detect_purity, free_reference_config, ippt_value, minimize_fidelity_ew, minimize_ippt,
    minimize_ippt_free, minimize_ippt_noisy, minimize_ippt_shots, Criterion, DetectionReport, FidelityMode,
    LearningRate, OptimizerConfig, OptimizerMethod, DETECTION_TOL, SHOT_SIGMAS,
};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::qmath::Bipartition;
use crate::rng::Stream;
use crate::states::{load_state, State};
use crate::states::{target_state, DensityMatrix, TargetStateParams};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "IPPT_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "ippt", version, about = "Interferometric PPT entanglement detection")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one criterion (or all) on a state file; prints DetectionReport JSON.
    Detect(DetectArgs),
    /// Phase sweep of the reference against the three-qubit target.
    #[command(long_about = "Phase sweep of the reference against the three-qubit target.\n\n\
        CSV columns: theta,ideal_value,noisy_value,shot_mean,shot_stderr \
        (shot columns empty without --shots). Floats carry 12 significant digits. \
        The transposed qubit is reported on stderr, or in the JSON output.")]
    SweepTheta(SweepArgs),
    /// Detection rates on random induced mixed states.
    #[command(long_about = "Detection rates on random induced mixed states.\n\n\
        CSV columns: k,method,depth,samples,detected,detection_rate,wilson_low,wilson_high \
        (depth empty for exact_ppt and purity; 95% Wilson interval). \
        Floats carry 12 significant digits.")]
    Ensemble(EnsembleArgs),
    /// Minimum of the fidelity witness over all pure references.
    EwMin(EwMinArgs),
    /// iPPT estimate from simulated shots on state files, or from a shot CSV.
    Estimate(EstimateArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DetectArgs {
    /// State file (JSON).
    #[arg(long)]
    state: Option<PathBuf>,
    /// exact-ppt, ippt, purity, fidelity-ew or all.
    #[arg(long)]
    method: Option<String>,
    /// Bipartition such as 0/12 (A before the slash).
    #[arg(long)]
    split: Option<String>,
    /// Ansatz depth for the variational criteria.
    #[arg(long)]
    depth: Option<usize>,
    /// Optimise the iPPT reference as a free vector instead of a circuit.
    #[arg(long)]
    free: bool,
    /// Fixed pure reference state file; skips optimisation.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Depolarizing probability on every reference-circuit gate.
    #[arg(long)]
    noise: Option<f64>,
    /// Estimate iPPT from this many shots per evaluation (SPSA).
    #[arg(long)]
    shots: Option<usize>,
    /// gd, adam or spsa.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// joint or two-stage.
    #[arg(long)]
    fidelity_mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file mirroring these flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepArgs {
    /// Grid points on [theta_min, theta_max], endpoints included.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    theta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta_max: Option<f64>,
    #[arg(long)]
    shots: Option<usize>,
    /// Per-pair visibilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    visibility: Option<Vec<f64>>,
    /// ideal or experimental component weights.
    #[arg(long)]
    target: Option<String>,
    /// Transposed split; chosen automatically when omitted.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    serial: bool,
    /// Output path; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EnsembleArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Environment dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    fidelity_mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run samples sequentially.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EwMinArgs {
    /// ideal or experimental component weights.
    #[arg(long)]
    target: Option<String>,
    /// Arbitrary state file instead of the target family.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EstimateArgs {
    /// Target state file.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Reference state file.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Recorded shots (CSV or JSON) to analyse instead of simulating.
    #[arg(long)]
    shots_file: Option<PathBuf>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    visibility: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the simulated shots here.
    #[arg(long)]
    save_shots: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

/// Overlays explicitly given flags on the config file.
fn merge_config<T>(cli: T, config: Option<&Path>) -> Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let Some(path) = config else { return Ok(cli) };
    let text = fs::read_to_string(path)?;
    let mut base: Value = serde_json::from_str(&text)?;
    // validates key names and types before the overlay
    serde_json::from_value::<T>(base.clone())?;
    let Value::Object(flags) = serde_json::to_value(&cli)? else {
        unreachable!("argument structs serialize to objects")
    };
    let obj =
        base.as_object_mut().ok_or_else(|| Error::Parse("config file must hold a JSON object".into()))?;
    for (k, v) in flags {
        if !v.is_null() && v != Value::Bool(false) {
            obj.insert(k, v);
        }
    }
    Ok(serde_json::from_value(base)?)
}

fn parse_split(s: Option<&str>, n: usize) -> Result<Bipartition> {
    let bip = match s {
        Some(s) => s.parse::<Bipartition>()?,
        None => Bipartition::leading(n, n / 2)?,
    };
    if bip.n_qubits() != n {
        return Err(Error::DimensionMismatch(format!(
            "split `{bip}` covers {} qubits, state has {n}",
            bip.n_qubits()
        )));
    }
    Ok(bip)
}

fn parse_method(s: &str) -> Result<Option<Criterion>> {
    if s == "all" {
        return Ok(None);
    }
    s.replace('-', "_").parse().map(Some)
}

fn parse_optimizer(s: &str) -> Result<OptimizerMethod> {
    match s {
        "gd" | "gradient-descent" | "gradient_descent" => Ok(OptimizerMethod::GradientDescent),
        "adam" => Ok(OptimizerMethod::Adam),
        "spsa" => Ok(OptimizerMethod::Spsa),
        other => Err(Error::Parse(format!("unknown optimizer `{other}`"))),
    }
}

fn parse_fidelity_mode(s: Option<&str>) -> Result<FidelityMode> {
    match s {
        None | Some("joint") => Ok(FidelityMode::Joint),
        Some("two-stage") | Some("two_stage") => Ok(FidelityMode::TwoStage),
        Some(other) => Err(Error::Parse(format!("unknown fidelity mode `{other}`"))),
    }
}

fn parse_target(s: Option<&str>) -> Result<TargetStateParams> {
    match s {
        None | Some("ideal") => Ok(TargetStateParams::ideal()),
        Some("experimental") => Ok(TargetStateParams::experimental()),
        Some(other) => Err(Error::Parse(format!("unknown target `{other}`"))),
    }
}

fn require<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
}

fn load_density(path: &Path) -> Result<DensityMatrix> {
    Ok(load_state(path)?.to_density())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn optimizer_from(
    method: Option<&str>,
    iterations: Option<usize>,
    restarts: Option<usize>,
    learning_rate: Option<f64>,
    seed: Option<u64>,
) -> Result<OptimizerConfig> {
    let mut cfg = OptimizerConfig::default();
    if let Some(m) = method {
        cfg.method = parse_optimizer(m)?;
    }
    if let Some(i) = iterations {
        cfg.max_iterations = i;
    }
    if let Some(r) = restarts {
        cfg.restarts = r;
    }
    if let Some(lr) = learning_rate {
        cfg.learning_rate = match cfg.learning_rate {
            LearningRate::Cosine { final_rate, .. } => {
                LearningRate::Cosine { initial: lr, final_rate: final_rate.min(lr) }
            }
            LearningRate::Constant { .. } => LearningRate::Constant { rate: lr },
        };
    }
    cfg.seed = seed.unwrap_or(0);
    cfg.validate()?;
    Ok(cfg)
}

fn run_detect(args: DetectArgs) -> Result<()> {
    let rho = load_density(require(&args.state, "state")?)?;
    let bip = parse_split(args.split.as_deref(), rho.n_qubits())?;
    let methods = match parse_method(args.method.as_deref().unwrap_or("all"))? {
        Some(m) => vec![m],
        None => vec![Criterion::ExactPpt, Criterion::Ippt, Criterion::Purity, Criterion::FidelityEw],
    };
    let mut optimizer = optimizer_from(
        args.optimizer.as_deref(),
        args.iterations,
        args.restarts,
        args.learning_rate,
        args.seed,
    )?;
    let circuit = build_ansatz(rho.n_qubits(), args.depth.unwrap_or(3))?;
    let mut reports = Vec::new();
    for m in methods {
        let report = match m {
            Criterion::ExactPpt => detect_exact_ppt(&rho, &bip)?,
            Criterion::Purity => detect_purity(&rho, &bip)?,
            Criterion::FidelityEw => minimize_fidelity_ew(
                &rho,
                &circuit,
                &bip,
                &optimizer,
                parse_fidelity_mode(args.fidelity_mode.as_deref())?,
            )?,
            Criterion::Ippt => {
                if let Some(path) = &args.reference {
                    let sigma = load_state(path)?;
                    let value = match &sigma {
                        State::Pure(p) => ippt_value(&rho, p, &bip)?,
                        State::Density(d) => ippt_value(&rho, d, &bip)?,
                    };
                    fixed_reference_report(value, &bip)
                } else if let Some(shots) = args.shots {
                    if args.optimizer.is_none() {
                        optimizer.method = OptimizerMethod::Spsa;
                    }
                    let settings = ShotSettings { shots, visibility: None };
                    minimize_ippt_shots(&rho, &circuit, &bip, &settings, &optimizer)?
                } else if args.free {
                    let mut cfg = free_reference_config(optimizer.seed);
                    if let Some(r) = args.restarts {
                        cfg.restarts = r;
                    }
                    minimize_ippt_free(&rho, &bip, &cfg)?
                } else if let Some(p) = args.noise {
                    minimize_ippt_noisy(&rho, &circuit, &NoiseModel::uniform(p)?, &bip, &optimizer)?
                } else {
                    minimize_ippt(&rho, &circuit, &bip, &optimizer)?
                }
            }
        };
        reports.push(report);
    }
    let text = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])?
    } else {
        serde_json::to_string_pretty(&reports)?
    };
    emit(args.out.as_deref(), &(text + "\n"))
}

fn fixed_reference_report(value: f64, bip: &Bipartition) -> DetectionReport {
    DetectionReport {
        criterion: Criterion::Ippt,
        value,
        detected: value < -DETECTION_TOL,
        tolerance: DETECTION_TOL,
        bipartition: bip.clone(),
        stderr: None,
        shots: None,
        ansatz_depth: None,
        theta_star: None,
        reference: None,
        iterations: 0,
        optimizer: None,
        traces: Vec::new(),
    }
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let points = args.points.unwrap_or(64);
    let grid =
        linspace(args.theta_min.unwrap_or(0.0), args.theta_max.unwrap_or(std::f64::consts::PI), points);
    let bipartition = args.split.as_deref().map(|s| parse_split(Some(s), 3)).transpose()?;
    let config = SweepConfig {
        theta_grid: grid,
        target: parse_target(args.target.as_deref())?,
        visibility: args.visibility.map(VisibilityModel::new).transpose()?,
        shots: args.shots,
        seed: args.seed.unwrap_or(0),
        bipartition,
        execution: if args.serial { Execution::Serial } else { Execution::Parallel },
    };
    let table = theta_sweep(&config)?;
    let json_out = args.out.as_deref().is_some_and(is_json);
    if json_out {
        emit(args.out.as_deref(), &(serde_json::to_string_pretty(&table)? + "\n"))
    } else {
        eprintln!(
            "split {} ({})",
            table.bipartition,
            if table.auto_selected { "auto-selected" } else { "given" }
        );
        emit(args.out.as_deref(), &table.to_csv())
    }
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn run_ensemble(args: EnsembleArgs) -> Result<()> {
    let defaults = EnsembleStudyConfig::default();
    let n = args.n.unwrap_or(defaults.n_qubits);
    let mut optimizer = defaults.optimizer.clone();
    if let Some(i) = args.iterations {
        optimizer.max_iterations = i;
    }
    if let Some(r) = args.restarts {
        optimizer.restarts = r;
    }
    let config = EnsembleStudyConfig {
        n_qubits: n,
        bipartition: args.split.as_deref().map(|s| parse_split(Some(s), n)).transpose()?,
        k_values: args.k.unwrap_or(defaults.k_values),
        samples_per_k: args.samples.unwrap_or(defaults.samples_per_k),
        depths: args.depths.unwrap_or(defaults.depths),
        optimizer,
        fidelity_mode: parse_fidelity_mode(args.fidelity_mode.as_deref())?,
        seed: args.seed.unwrap_or(defaults.seed),
        execution: if args.serial { Execution::Serial } else { Execution::Parallel },
    };
    let table = ensemble_study(&config)?;
    if args.out.as_deref().is_some_and(is_json) {
        emit(args.out.as_deref(), &(serde_json::to_string_pretty(&table)? + "\n"))
    } else {
        emit(args.out.as_deref(), &table.to_csv())
    }
}

fn run_ew_min(args: EwMinArgs) -> Result<()> {
    let rho = match &args.state {
        Some(p) => load_density(p)?,
        None => target_state(&parse_target(args.target.as_deref())?)?,
    };
    let bip = parse_split(Some(args.split.as_deref().unwrap_or("0/12")), rho.n_qubits())?;
    let mut cfg = ew_min_config(args.seed.unwrap_or(0));
    if let Some(r) = args.restarts {
        cfg.restarts = r;
    }
    if let Some(i) = args.iterations {
        cfg.max_iterations = i;
    }
    cfg.validate()?;
    let result = ew_min_search_state(&rho, &bip, &cfg)?;
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&result)? + "\n"))
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    let (record, exact, bip) = if let Some(path) = &args.shots_file {
        let record = ShotRecord::load(path)?;
        let bip = parse_split(args.split.as_deref(), record.n_pairs())?;
        (record, None, bip)
    } else {
        let rho = load_density(require(&args.state, "state")?)?;
        let sigma = load_state(require(&args.reference, "reference")?)?;
        let n = rho.n_qubits();
        let bip = parse_split(args.split.as_deref(), n)?;
        let settings = ShotSettings {
            shots: args.shots.unwrap_or(100_000),
            visibility: args.visibility.clone().map(VisibilityModel::new).transpose()?,
        };
        settings.validate(n)?;
        let sigma_density = sigma.to_density();
        let mut dist = bsm::bell_distribution(&rho, &sigma_density)?;
        if let Some(v) = &settings.visibility {
            dist = bsm::apply_visibility(&dist, v)?;
        }
        let exact = bsm::expected_ippt(&dist, &bip);
        let mut rng = Stream::new(args.seed.unwrap_or(0)).rng();
        let record = bsm::sample_shots(&dist, n, settings.shots, &mut rng)?;
        if let Some(p) = &args.save_shots {
            record.save(p)?;
        }
        (record, Some(exact), bip)
    };
    let est = bsm::estimate_ippt(&record, &bip)?;
    let out = json!({
        "bipartition": bip,
        "shots": est.shots,
        "mean": est.mean,
        "stderr": est.stderr,
        "detected": est.mean + SHOT_SIGMAS * est.stderr < 0.0,
        "expected": exact,
    });
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Detect(a) => {
            let cfg = a.config.clone();
            run_detect(merge_config(a, cfg.as_deref())?)
        }
        Command::SweepTheta(a) => {
            let cfg = a.config.clone();
            run_sweep(merge_config(a, cfg.as_deref())?)
        }
        Command::Ensemble(a) => {
            let cfg = a.config.clone();
            run_ensemble(merge_config(a, cfg.as_deref())?)
        }
        Command::EwMin(a) => {
            let cfg = a.config.clone();
            run_ew_min(merge_config(a, cfg.as_deref())?)
        }
        Command::Estimate(a) => {
            let cfg = a.config.clone();
            run_estimate(merge_config(a, cfg.as_deref())?)
        }
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
/// Returns 0 on success and 2 on any input error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            return 2;
        }
        par::init_workers(w);
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn config_overlay_prefers_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"points": 5, "seed": 3, "serial": true}"#).unwrap();
        let cli = SweepArgs { seed: Some(9), ..Default::default() };
        let merged = merge_config(cli, Some(&path)).unwrap();
        assert_eq!(merged.points, Some(5));
        assert_eq!(merged.seed, Some(9));
        assert!(merged.serial);
        fs::write(&path, r#"{"pointz": 5}"#).unwrap();
        assert!(merge_config(SweepArgs::default(), Some(&path)).is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!(parse_method("exact-ppt").unwrap(), Some(Criterion::ExactPpt));
        assert_eq!(parse_method("fidelity-ew").unwrap(), Some(Criterion::FidelityEw));
        assert_eq!(parse_method("all").unwrap(), None);
        assert!(parse_method("negativity").is_err());
    }
}
