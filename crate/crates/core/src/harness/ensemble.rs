//! Detection rates on random induced mixed states.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::table::{fmt_sig, wilson_interval, Z95};
use crate::circuits::build_ansatz;
use crate::detection::{
    exact_ppt, minimize_fidelity_ew, minimize_ippt, purity_criterion, Criterion, FidelityMode,
    OptimizerConfig, DETECTION_TOL,
};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::qmath::{random_induced_mixed, Bipartition};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleStudyConfig {
    pub n_qubits: usize,
    /// Defaults to the leading half of the register.
    pub bipartition: Option<Bipartition>,
    pub k_values: Vec<usize>,
    pub samples_per_k: usize,
    pub depths: Vec<usize>,
    pub optimizer: OptimizerConfig,
    pub fidelity_mode: FidelityMode,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for EnsembleStudyConfig {
    fn default() -> Self {
        Self {
            n_qubits: 6,
            bipartition: None,
            k_values: vec![2, 8, 32],
            samples_per_k: 100,
            depths: vec![1, 2, 3],
            optimizer: OptimizerConfig::default(),
            fidelity_mode: FidelityMode::Joint,
            seed: 1,
            execution: Execution::Parallel,
        }
    }
}

impl EnsembleStudyConfig {
    pub fn resolved_bipartition(&self) -> Result<Bipartition> {
        match &self.bipartition {
            Some(b) if b.n_qubits() != self.n_qubits => Err(Error::DimensionMismatch(format!(
                "bipartition over {} qubits for n = {}",
                b.n_qubits(),
                self.n_qubits
            ))),
            Some(b) => Ok(b.clone()),
            None => Bipartition::leading(self.n_qubits, self.n_qubits / 2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_k == 0 {
            return Err(Error::invariant("samples_per_k_positive", "samples_per_k must be at least 1"));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::invariant("k_values_nonempty", "k_values must be nonempty and positive"));
        }
        if self.depths.contains(&0) {
            return Err(Error::InvalidArgument("circuit depths must be positive".into()));
        }
        self.resolved_bipartition()?;
        self.optimizer.validate()
    }
}

/// Verdicts for one sampled state.
#[derive(Debug, Clone, PartialEq)]
struct SampleVerdicts {
    exact_ppt: bool,
    purity: bool,
    ippt: Vec<bool>,
    fidelity_ew: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub k: usize,
    pub method: Criterion,
    pub depth: Option<usize>,
    pub samples: usize,
    pub detected: usize,
    pub detection_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTable {
    pub bipartition: Bipartition,
    pub rows: Vec<EnsembleRow>,
}

/// Column order of [`EnsembleTable::to_csv`].
pub const ENSEMBLE_COLUMNS: [&str; 8] =
    ["k", "method", "depth", "samples", "detected", "detection_rate", "wilson_low", "wilson_high"];

impl EnsembleTable {
    /// Rate for `(k, method, depth)`, if present.
    pub fn rate(&self, k: usize, method: Criterion, depth: Option<usize>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.k == k && r.method == method && r.depth == depth)
            .map(|r| r.detection_rate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = ENSEMBLE_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let depth = r.depth.map(|d| d.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.k,
                r.method,
                depth,
                r.samples,
                r.detected,
                fmt_sig(r.detection_rate),
                fmt_sig(r.wilson_low),
                fmt_sig(r.wilson_high)
            ));
        }
        out
    }
}

fn evaluate_sample(
    config: &EnsembleStudyConfig,
    bip: &Bipartition,
    circuits: &[crate::circuits::ParamCircuit],
    k: usize,
    index: usize,
) -> Result<SampleVerdicts> {
    let stream = Stream::new(config.seed).child(k as u64).child(index as u64);
    let rho = random_induced_mixed(config.n_qubits, k, &mut stream.child(0).rng());
    let optimizer = OptimizerConfig {
        seed: stream.child(1).rng().next_u64(),
        execution: Execution::Serial,
        ..config.optimizer.clone()
    };
    let exact = exact_ppt(&rho, bip)?;
    let purity = purity_criterion(&rho, bip)?;
    let mut ippt = Vec::with_capacity(circuits.len());
    let mut fidelity = Vec::with_capacity(circuits.len());
    for c in circuits {
        ippt.push(minimize_ippt(&rho, c, bip, &optimizer)?.detected);
        fidelity.push(minimize_fidelity_ew(&rho, c, bip, &optimizer, config.fidelity_mode)?.detected);
    }
    Ok(SampleVerdicts {
        exact_ppt: exact < -DETECTION_TOL,
        purity: purity < -DETECTION_TOL,
        ippt,
        fidelity_ew: fidelity,
    })
}

/// Runs every criterion on `samples_per_k` states for each `k`. Each sample
/// owns the stream `(seed, k, index)`, so the table is independent of the
/// execution mode.
pub fn ensemble_study(config: &EnsembleStudyConfig) -> Result<EnsembleTable> {
    config.validate()?;
    let bip = config.resolved_bipartition()?;
    let circuits =
        config.depths.iter().map(|&d| build_ansatz(config.n_qubits, d)).collect::<Result<Vec<_>>>()?;
    let n = config.samples_per_k;
    let mut rows = Vec::new();
    for &k in &config.k_values {
        let verdicts =
            par::map_indexed(config.execution, n, |i| evaluate_sample(config, &bip, &circuits, k, i))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
        let mut push = |method, depth, detected: usize| {
            let (lo, hi) = wilson_interval(detected, n, Z95);
            rows.push(EnsembleRow {
                k,
                method,
                depth,
                samples: n,
                detected,
                detection_rate: detected as f64 / n as f64,
                wilson_low: lo,
                wilson_high: hi,
            });
        };
        push(Criterion::ExactPpt, None, verdicts.iter().filter(|v| v.exact_ppt).count());
        push(Criterion::Purity, None, verdicts.iter().filter(|v| v.purity).count());
        for (j, &d) in config.depths.iter().enumerate() {
            push(Criterion::Ippt, Some(d), verdicts.iter().filter(|v| v.ippt[j]).count());
        }
        for (j, &d) in config.depths.iter().enumerate() {
            push(Criterion::FidelityEw, Some(d), verdicts.iter().filter(|v| v.fidelity_ew[j]).count());
        }
    }
    Ok(EnsembleTable { bipartition: bip, rows })
}
