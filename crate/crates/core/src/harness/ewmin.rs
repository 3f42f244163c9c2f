//! Exhaustive fidelity-witness floor over all pure references.

use serde::{Deserialize, Serialize};

use crate::detection::{
    minimize_fidelity_ew_free, InitStrategy, LearningRate, OptimizerConfig, OptimizerMethod,
};
use crate::error::Result;
use crate::qmath::{Bipartition, C64};
use crate::states::{target_state, DensityMatrix, PureState, TargetStateParams};

/// Multi-start settings used by the `ew-min` experiment.
pub fn ew_min_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        method: OptimizerMethod::Adam,
        max_iterations: 400,
        learning_rate: LearningRate::Cosine { initial: 0.05, final_rate: 1e-4 },
        restarts: 64,
        init: InitStrategy::UniformRandom,
        convergence_tol: 1e-12,
        seed,
        ..Default::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwMinResult {
    pub value: f64,
    pub bipartition: Bipartition,
    /// Achieving reference as `[re, im]` pairs.
    pub reference: Vec<[f64; 2]>,
    pub restarts: usize,
    pub seed: u64,
}

impl EwMinResult {
    pub fn reference_state(&self) -> Result<PureState> {
        let amps = self.reference.iter().map(|&[re, im]| C64::new(re, im)).collect();
        PureState::normalized(self.bipartition.n_qubits(), amps)
    }
}

/// `min_psi alpha(psi) - <psi|rho|psi>` for the three-qubit target.
pub fn ew_min_search(
    target: &TargetStateParams,
    bipartition: &Bipartition,
    optimizer: &OptimizerConfig,
) -> Result<EwMinResult> {
    ew_min_search_state(&target_state(target)?, bipartition, optimizer)
}

/// Same search on an arbitrary state.
pub fn ew_min_search_state(
    rho: &DensityMatrix,
    bipartition: &Bipartition,
    optimizer: &OptimizerConfig,
) -> Result<EwMinResult> {
    let report = minimize_fidelity_ew_free(rho, bipartition, optimizer)?;
    Ok(EwMinResult {
        value: report.value,
        bipartition: bipartition.clone(),
        reference: report.reference.unwrap_or_default(),
        restarts: optimizer.restarts,
        seed: optimizer.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::fidelity_ew_value;
    use crate::states::ghz;

    fn split() -> Bipartition {
        "0/12".parse().unwrap()
    }

    fn quick(seed: u64) -> OptimizerConfig {
        OptimizerConfig { restarts: 16, ..ew_min_config(seed) }
    }

    #[test]
    fn ghz_projector_reaches_minus_half() {
        let rho = ghz(3, false, 1.0).unwrap().to_density();
        let r = ew_min_search_state(&rho, &split(), &quick(1)).unwrap();
        assert!((r.value + 0.5).abs() < 1e-3, "{}", r.value);
        let psi = r.reference_state().unwrap();
        assert!((fidelity_ew_value(&rho, &psi, &split()).unwrap() - r.value).abs() < 1e-9);
    }

    #[test]
    fn maximally_mixed_bound() {
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        let r = ew_min_search_state(&rho, &split(), &quick(2)).unwrap();
        assert!(r.value >= 0.375 - 1e-9);
        assert!((r.value - 0.375).abs() < 1e-3);
    }

    #[test]
    fn ideal_target_floor() {
        let r = ew_min_search(&TargetStateParams::ideal(), &split(), &quick(3)).unwrap();
        assert!((r.value - 0.05).abs() < 1e-3, "{}", r.value);
    }
}
