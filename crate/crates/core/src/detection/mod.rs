//! Entanglement criteria and the optimisers that drive the variational ones.
//!
//! Every criterion is "negative means entangled". The exact PPT value and the
//! purity criterion are closed-form; the iPPT and fidelity-witness values are
//! minimised over reference states produced by a circuit or left free.

pub mod choi;
pub mod criteria;
pub mod optimize;
pub mod variational;

use serde::{Deserialize, Serialize};

pub use choi::{
    apply_via_choi, choi_matrix, choi_witness_value, choi_witness_value_via_swap, witness_from_choi,
};
pub use criteria::{
    bell_pair_observable, exact_ppt, fidelity_ew_value, ippt_value, ippt_value_via_observable,
    partial_transpose_a, purity_criterion, Reference,
};
pub use optimize::{
    minimize, InitStrategy, LearningRate, Objective, OptimizationResult, OptimizerConfig, OptimizerMethod,
    RestartTrace,
};
pub use variational::{
    CircuitObjective, Expectation, FreeReferenceObjective, NoisyCircuitObjective, StateCost,
};

use crate::bsm::{self, ShotSettings};
use crate::circuits::{NoiseModel, ParamCircuit};
use crate::error::{Error, Result};
use crate::qmath::{schmidt_alpha_with_gradient, Bipartition, C64};
use crate::rng::{Stream, StreamRng};
use crate::states::{DensityMatrix, PureState};

/// Values below `-DETECTION_TOL` count as detected for exact evaluations.
pub const DETECTION_TOL: f64 = 1e-9;

/// Shot-based estimates detect when `mean + SHOT_SIGMAS * stderr < 0`.
pub const SHOT_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    ExactPpt,
    Ippt,
    Purity,
    FidelityEw,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::ExactPpt => "exact_ppt",
            Criterion::Ippt => "ippt",
            Criterion::Purity => "purity",
            Criterion::FidelityEw => "fidelity_ew",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_ppt" | "ppt" => Ok(Criterion::ExactPpt),
            "ippt" => Ok(Criterion::Ippt),
            "purity" => Ok(Criterion::Purity),
            "fidelity_ew" | "fidelity" => Ok(Criterion::FidelityEw),
            other => Err(Error::Parse(format!("unknown criterion `{other}`"))),
        }
    }
}

/// How the fidelity witness reference is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMode {
    /// Minimise `alpha(psi) - <psi|rho|psi>` directly.
    #[default]
    Joint,
    /// Maximise the fidelity first, then evaluate the witness there.
    TwoStage,
}

/// Outcome of one detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub criterion: Criterion,
    pub value: f64,
    pub detected: bool,
    pub tolerance: f64,
    pub bipartition: Bipartition,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ansatz_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    /// Optimal free reference as `[re, im]` pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<[f64; 2]>>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<RestartTrace>,
}

impl DetectionReport {
    fn closed_form(criterion: Criterion, value: f64, bipartition: &Bipartition) -> Self {
        Self {
            criterion,
            value,
            detected: value < -DETECTION_TOL,
            tolerance: DETECTION_TOL,
            bipartition: bipartition.clone(),
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

    fn optimized(
        criterion: Criterion,
        value: f64,
        bipartition: &Bipartition,
        result: OptimizationResult,
        config: &OptimizerConfig,
    ) -> Self {
        Self {
            iterations: result.iterations,
            optimizer: Some(config.clone()),
            traces: result.traces,
            theta_star: Some(result.best_x),
            ..Self::closed_form(criterion, value, bipartition)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_target(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<()> {
    if rho.n_qubits() != bipartition.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit state with {}-qubit bipartition",
            rho.n_qubits(),
            bipartition.n_qubits()
        )));
    }
    Ok(())
}

fn check_circuit(rho: &DensityMatrix, circuit: &ParamCircuit) -> Result<()> {
    if circuit.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit circuit for a {}-qubit state",
            circuit.n_qubits(),
            rho.n_qubits()
        )));
    }
    Ok(())
}

pub fn detect_exact_ppt(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<DetectionReport> {
    let v = exact_ppt(rho, bipartition)?;
    Ok(DetectionReport::closed_form(Criterion::ExactPpt, v, bipartition))
}

pub fn detect_purity(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<DetectionReport> {
    let v = purity_criterion(rho, bipartition)?;
    Ok(DetectionReport::closed_form(Criterion::Purity, v, bipartition))
}

/// Minimum of `Tr(rho sigma(theta)^{T_A})` over circuit references.
pub fn minimize_ippt(
    rho: &DensityMatrix,
    circuit: &ParamCircuit,
    bipartition: &Bipartition,
    config: &OptimizerConfig,
) -> Result<DetectionReport> {
    check_target(rho, bipartition)?;
    check_circuit(rho, circuit)?;
    let pt = partial_transpose_a(rho, bipartition)?;
    let obj = CircuitObjective { circuit, cost: Expectation(&pt) };
    let res = minimize(&obj, config)?;
    let value = res.best_value;
    let mut report = DetectionReport::optimized(Criterion::Ippt, value, bipartition, res, config);
    report.ansatz_depth = Some(circuit.depth());
    Ok(report)
}

/// Defaults for the unconstrained reference: projected gradient descent on
/// the unit sphere, which converges to the bottom of the `rho^{T_A}` spectrum.
pub fn free_reference_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        method: OptimizerMethod::GradientDescent,
        max_iterations: 2000,
        learning_rate: LearningRate::Constant { rate: 0.5 },
        restarts: 4,
        init: InitStrategy::UniformRandom,
        convergence_tol: 1e-12,
        seed,
        ..Default::default()
    }
}

fn pack_reference(psi: &[C64]) -> Vec<[f64; 2]> {
    psi.iter().map(|z| [z.re, z.im]).collect()
}

/// iPPT minimised over all pure references.
pub fn minimize_ippt_free(
    rho: &DensityMatrix,
    bipartition: &Bipartition,
    config: &OptimizerConfig,
) -> Result<DetectionReport> {
    check_target(rho, bipartition)?;
    let pt = partial_transpose_a(rho, bipartition)?;
    let obj = FreeReferenceObjective { dim: rho.dim(), cost: Expectation(&pt) };
    let res = minimize(&obj, config)?;
    let reference = pack_reference(&obj.reference(&res.best_x));
    let value = res.best_value;
    let mut report = DetectionReport::optimized(Criterion::Ippt, value, bipartition, res, config);
    report.theta_star = None;
    report.reference = Some(reference);
    Ok(report)
}

/// iPPT with the reference prepared by a noisy circuit.
pub fn minimize_ippt_noisy(
    rho: &DensityMatrix,
    circuit: &ParamCircuit,
    noise: &NoiseModel,
    bipartition: &Bipartition,
    config: &OptimizerConfig,
) -> Result<DetectionReport> {
    check_target(rho, bipartition)?;
    check_circuit(rho, circuit)?;
    noise.validate()?;
    let pt = partial_transpose_a(rho, bipartition)?;
    let obj = NoisyCircuitObjective { circuit, noise: *noise, observable: &pt };
    let res = minimize(&obj, config)?;
    let value = res.best_value;
    let mut report = DetectionReport::optimized(Criterion::Ippt, value, bipartition, res, config);
    report.ansatz_depth = Some(circuit.depth());
    Ok(report)
}

fn fidelity_cost<'a>(
    rho: &'a DensityMatrix,
    bipartition: &'a Bipartition,
) -> impl Fn(&[C64]) -> (f64, Vec<C64>) + Sync + 'a {
    move |psi: &[C64]| {
        let (alpha, ga) = schmidt_alpha_with_gradient(psi, bipartition);
        let (f, g) = Expectation(rho.matrix()).eval(psi);
        (alpha - f, ga.iter().zip(&g).map(|(a, b)| a - b).collect())
    }
}

/// Fidelity-witness minimum over circuit references.
pub fn minimize_fidelity_ew(
    rho: &DensityMatrix,
    circuit: &ParamCircuit,
    bipartition: &Bipartition,
    config: &OptimizerConfig,
    mode: FidelityMode,
) -> Result<DetectionReport> {
    check_target(rho, bipartition)?;
    check_circuit(rho, circuit)?;
    let (res, value) = match mode {
        FidelityMode::Joint => {
            let obj = CircuitObjective { circuit, cost: fidelity_cost(rho, bipartition) };
            let res = minimize(&obj, config)?;
            let v = res.best_value;
            (res, v)
        }
        FidelityMode::TwoStage => {
            let neg = rho.matrix().scale_real(-1.0);
            let obj = CircuitObjective { circuit, cost: Expectation(&neg) };
            let res = minimize(&obj, config)?;
            let psi = circuit.apply(&res.best_x)?;
            let v = fidelity_ew_value(rho, &psi, bipartition)?;
            (res, v)
        }
    };
    let mut report = DetectionReport::optimized(Criterion::FidelityEw, value, bipartition, res, config);
    report.ansatz_depth = Some(circuit.depth());
    Ok(report)
}

/// Fidelity-witness minimum over all pure references.
pub fn minimize_fidelity_ew_free(
    rho: &DensityMatrix,
    bipartition: &Bipartition,
    config: &OptimizerConfig,
) -> Result<DetectionReport> {
    check_target(rho, bipartition)?;
    let obj = FreeReferenceObjective { dim: rho.dim(), cost: fidelity_cost(rho, bipartition) };
    let res = minimize(&obj, config)?;
    let psi = obj.reference(&res.best_x);
    let value = res.best_value;
    let mut report = DetectionReport::optimized(Criterion::FidelityEw, value, bipartition, res, config);
    report.theta_star = None;
    report.reference = Some(pack_reference(&psi));
    Ok(report)
}

/// iPPT estimated from simulated Bell-measurement shots.
struct ShotObjective<'a> {
    rho: &'a DensityMatrix,
    circuit: &'a ParamCircuit,
    bipartition: &'a Bipartition,
    settings: &'a ShotSettings,
}

impl ShotObjective<'_> {
    fn distribution(&self, x: &[f64]) -> Vec<f64> {
        let psi = PureState::from_normalized(self.rho.n_qubits(), self.circuit.amplitudes(x));
        let dist = bsm::bell_distribution(self.rho, &psi).expect("registers checked");
        self.settings
            .visibility
            .as_ref()
            .map_or(dist.clone(), |v| bsm::apply_visibility(&dist, v).expect("visibility checked"))
    }
}

impl Objective for ShotObjective<'_> {
    fn dim(&self) -> usize {
        self.circuit.num_params()
    }

    fn value(&self, x: &[f64]) -> f64 {
        bsm::expected_ippt(&self.distribution(x), self.bipartition)
    }

    fn value_and_gradient(&self, _x: &[f64]) -> (f64, Vec<f64>) {
        unreachable!("shot objectives are only driven by SPSA")
    }

    fn sample_value(&self, x: &[f64], rng: &mut StreamRng) -> f64 {
        let dist = self.distribution(x);
        let record = bsm::sample_shots(&dist, self.rho.n_qubits(), self.settings.shots, rng)
            .expect("valid distribution");
        bsm::estimate_ippt(&record, self.bipartition).expect("matching register").mean
    }
}

/// SPSA over circuit angles where every evaluation is a finite-shot estimate.
/// The reported value is a fresh estimate at the final angles.
pub fn minimize_ippt_shots(
    rho: &DensityMatrix,
    circuit: &ParamCircuit,
    bipartition: &Bipartition,
    settings: &ShotSettings,
    config: &OptimizerConfig,
) -> Result<DetectionReport> {
    check_target(rho, bipartition)?;
    check_circuit(rho, circuit)?;
    settings.validate(rho.n_qubits())?;
    if config.method != OptimizerMethod::Spsa {
        return Err(Error::InvalidArgument("shot-based optimisation requires the spsa method".into()));
    }
    let obj = ShotObjective { rho, circuit, bipartition, settings };
    let res = minimize(&obj, config)?;
    let mut rng = Stream::new(config.seed).child(u64::MAX).rng();
    let dist = obj.distribution(&res.best_x);
    let record = bsm::sample_shots(&dist, rho.n_qubits(), settings.shots, &mut rng)?;
    let est = bsm::estimate_ippt(&record, bipartition)?;
    let mut report = DetectionReport::optimized(Criterion::Ippt, est.mean, bipartition, res, config);
    report.stderr = Some(est.stderr);
    report.shots = Some(settings.shots);
    report.tolerance = SHOT_SIGMAS * est.stderr;
    report.detected = est.mean + SHOT_SIGMAS * est.stderr < 0.0;
    report.ansatz_depth = Some(circuit.depth());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::build_ansatz;
    use crate::qmath::{min_eigenvalue, random_induced_mixed};
    use crate::states::{ghz, target_state, werner, TargetStateParams};

    fn split(s: &str) -> Bipartition {
        s.parse().unwrap()
    }

    #[test]
    fn closed_form_reports() {
        let bip = split("0/1");
        let r = detect_exact_ppt(&werner(0.5).unwrap(), &bip).unwrap();
        assert!(r.detected && (r.value + 0.125).abs() < 1e-12);
        let r = detect_exact_ppt(&werner(0.2).unwrap(), &bip).unwrap();
        assert!(!r.detected);
        let r = detect_purity(&ghz(2, false, 1.0).unwrap().to_density(), &bip).unwrap();
        assert!(r.detected);
        let json = r.to_json().unwrap();
        assert!(json.contains("\"criterion\": \"purity\""));
        let back: DetectionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn circuit_ippt_finds_bell_minimum() {
        let rho = ghz(2, false, 1.0).unwrap().to_density();
        let c = build_ansatz(2, 2).unwrap();
        let r = minimize_ippt(&rho, &c, &split("0/1"), &OptimizerConfig::default()).unwrap();
        assert!((r.value + 0.5).abs() < 1e-4, "{}", r.value);
        assert!(r.detected);
        let theta = r.theta_star.as_ref().unwrap();
        let psi = c.apply(theta).unwrap();
        assert!((ippt_value(&rho, &psi, &split("0/1")).unwrap() - r.value).abs() < 1e-12);
    }

    #[test]
    fn free_reference_reaches_min_eigenvalue() {
        let mut rng = Stream::new(12).rng();
        let rho = random_induced_mixed(3, 2, &mut rng);
        let bip = split("0/12");
        let r = minimize_ippt_free(&rho, &bip, &free_reference_config(1)).unwrap();
        let lmin = min_eigenvalue(&partial_transpose_a(&rho, &bip).unwrap()).unwrap();
        assert!((r.value - lmin).abs() < 1e-6, "{} vs {lmin}", r.value);
        assert!(r.value >= lmin - 1e-12);
    }

    #[test]
    fn fidelity_modes_on_ghz_target() {
        let rho = target_state(&TargetStateParams::ideal()).unwrap();
        let bip = split("0/12");
        let c = build_ansatz(3, 2).unwrap();
        let cfg = OptimizerConfig { max_iterations: 300, ..Default::default() };
        let joint = minimize_fidelity_ew(&rho, &c, &bip, &cfg, FidelityMode::Joint).unwrap();
        let two = minimize_fidelity_ew(&rho, &c, &bip, &cfg, FidelityMode::TwoStage).unwrap();
        assert!(joint.value <= 0.05 + 1e-3, "{}", joint.value);
        assert!(two.value >= joint.value - 1e-3);
        assert!(!joint.detected || joint.value < 0.0);
    }

    #[test]
    fn noisy_reference_is_weaker() {
        let rho = ghz(2, false, 1.0).unwrap().to_density();
        let c = build_ansatz(2, 1).unwrap();
        let bip = split("0/1");
        let cfg = OptimizerConfig { max_iterations: 60, restarts: 2, ..Default::default() };
        let clean = minimize_ippt(&rho, &c, &bip, &cfg).unwrap();
        let noisy = minimize_ippt_noisy(&rho, &c, &NoiseModel::uniform(0.2).unwrap(), &bip, &cfg).unwrap();
        assert!(noisy.value > clean.value);
        assert!(noisy.value > -0.5);
    }

    #[test]
    fn shot_mode_requires_spsa_and_reports_stderr() {
        let rho = ghz(2, false, 1.0).unwrap().to_density();
        let c = build_ansatz(2, 1).unwrap();
        let bip = split("0/1");
        let settings = ShotSettings { shots: 2000, visibility: None };
        assert!(minimize_ippt_shots(&rho, &c, &bip, &settings, &OptimizerConfig::default()).is_err());
        let cfg = OptimizerConfig {
            method: OptimizerMethod::Spsa,
            max_iterations: 60,
            restarts: 2,
            learning_rate: LearningRate::Constant { rate: 0.3 },
            ..Default::default()
        };
        let r = minimize_ippt_shots(&rho, &c, &bip, &settings, &cfg).unwrap();
        let se = r.stderr.unwrap();
        assert!(se > 0.0 && se < 0.05);
        assert_eq!(r.detected, r.value + 3.0 * se < 0.0);
        assert!(r.detected, "{} +- {se}", r.value);
    }

    #[test]
    fn mismatched_registers_rejected() {
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        let c = build_ansatz(2, 1).unwrap();
        let err = minimize_ippt(&rho, &c, &split("0/12"), &OptimizerConfig::default());
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }
}
