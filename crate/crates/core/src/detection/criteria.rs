use crate::error::{Error, Result};
use crate::qmath::{
    gates, min_eigenvalue, partial_trace, partial_transpose, schmidt_alpha, Bipartition, ComplexMatrix,
    Subsystem, C64, MAX_QUBITS, ZERO,
};
use crate::states::{DensityMatrix, PureState};

/// Reference state of the overlap: a pure vector or a mixed density matrix.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    Pure(&'a PureState),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a PureState> for Reference<'a> {
    fn from(p: &'a PureState) -> Self {
        Reference::Pure(p)
    }
}

impl<'a> From<&'a DensityMatrix> for Reference<'a> {
    fn from(d: &'a DensityMatrix) -> Self {
        Reference::Mixed(d)
    }
}

impl Reference<'_> {
    pub fn n_qubits(&self) -> usize {
        match self {
            Reference::Pure(p) => p.n_qubits(),
            Reference::Mixed(d) => d.n_qubits(),
        }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        match self {
            Reference::Pure(p) => p.to_density().into_matrix(),
            Reference::Mixed(d) => d.matrix().clone(),
        }
    }
}

pub(crate) fn check_register(rho: &DensityMatrix, n: usize, bipartition: &Bipartition) -> Result<()> {
    if rho.n_qubits() != n || bipartition.n_qubits() != n {
        return Err(Error::DimensionMismatch(format!(
            "target has {} qubits, reference {n}, bipartition {}",
            rho.n_qubits(),
            bipartition.n_qubits()
        )));
    }
    Ok(())
}

/// `rho^{T_A}`
pub fn partial_transpose_a(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<ComplexMatrix> {
    partial_transpose(rho.matrix(), bipartition, Subsystem::A)
}

/// Smallest eigenvalue of `rho^{T_A}`; negative certifies entanglement.
pub fn exact_ppt(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<f64> {
    check_register(rho, rho.n_qubits(), bipartition)?;
    min_eigenvalue(&partial_transpose_a(rho, bipartition)?)
}

/// `Tr(rho sigma^{T_A})`, evaluated as `<psi|rho^{T_A}|psi>` for pure references.
pub fn ippt_value<'a>(
    rho: &DensityMatrix,
    sigma: impl Into<Reference<'a>>,
    bipartition: &Bipartition,
) -> Result<f64> {
    let sigma = sigma.into();
    check_register(rho, sigma.n_qubits(), bipartition)?;
    let pt = partial_transpose_a(rho, bipartition)?;
    Ok(match sigma {
        Reference::Pure(psi) => pt.expectation(psi.amplitudes()).re,
        Reference::Mixed(s) => pt.trace_product(s.matrix())?.re,
    })
}

/// `Tr[(rho (x) sigma) O]` for an explicit observable `O` on the doubled
/// register ordered (target slots, reference slots).
pub(crate) fn contract_doubled(
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    observable: &ComplexMatrix,
) -> C64 {
    let d = rho.rows();
    let mut acc = ZERO;
    for x in 0..d {
        for xp in 0..d {
            let r = rho[(x, xp)];
            if r == ZERO {
                continue;
            }
            for y in 0..d {
                for yp in 0..d {
                    // (rho (x) sigma)_{(x y),(x' y')} O_{(x' y'),(x y)}
                    acc += r * sigma[(y, yp)] * observable[(xp * d + yp, x * d + y)];
                }
            }
        }
    }
    acc
}

fn check_doubled_size(n: usize) -> Result<()> {
    if 2 * n > MAX_QUBITS {
        return Err(Error::SizeLimit(format!("doubled register of {} qubits exceeds {MAX_QUBITS}", 2 * n)));
    }
    Ok(())
}

/// The measured observable `Phi+_A (x) S_B` on `rho (x) sigma`, built
/// pair by pair: unnormalized `Phi+` on A pairs, `I - Psi-` (= SWAP) on B pairs.
pub fn bell_pair_observable(bipartition: &Bipartition) -> Result<ComplexMatrix> {
    let n = bipartition.n_qubits();
    check_doubled_size(n)?;
    let phi = gates::phi_plus_unnormalized(2);
    let swap = ComplexMatrix::identity(4).sub(&gates::psi_minus_unnormalized())?;
    let pair_ops: Vec<&ComplexMatrix> =
        (0..n).map(|q| if bipartition.contains_a(q) { &phi } else { &swap }).collect();
    let d = 1usize << n;
    let bit = |v: usize, q: usize| (v >> (n - 1 - q)) & 1;
    Ok(ComplexMatrix::from_fn(d * d, d * d, |row, col| {
        let (xr, yr) = (row / d, row % d);
        let (xc, yc) = (col / d, col % d);
        let mut v = C64::new(1.0, 0.0);
        for (q, op) in pair_ops.iter().enumerate() {
            let pr = (bit(xr, q) << 1) | bit(yr, q);
            let pc = (bit(xc, q) << 1) | bit(yc, q);
            v *= op[(pr, pc)];
            if v == ZERO {
                break;
            }
        }
        v
    }))
}

/// `Tr[(rho (x) sigma)(Phi+_A (x) S_B)]` with the observable materialized.
pub fn ippt_value_via_observable<'a>(
    rho: &DensityMatrix,
    sigma: impl Into<Reference<'a>>,
    bipartition: &Bipartition,
) -> Result<f64> {
    let sigma = sigma.into();
    check_register(rho, sigma.n_qubits(), bipartition)?;
    let obs = bell_pair_observable(bipartition)?;
    Ok(contract_doubled(rho.matrix(), &sigma.to_matrix(), &obs).re)
}

/// `Tr(rho_A^2) - Tr(rho^2)`; negative certifies entanglement.
pub fn purity_criterion(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<f64> {
    check_register(rho, rho.n_qubits(), bipartition)?;
    let rho_a = partial_trace(rho.matrix(), rho.n_qubits(), bipartition.a_qubits())?;
    let pa: f64 = rho_a.as_slice().iter().map(|z| z.norm_sqr()).sum();
    Ok(pa - rho.purity())
}

/// `<W> = alpha(psi) - <psi|rho|psi>` for the fidelity witness
/// `W = alpha I - |psi><psi|`.
pub fn fidelity_ew_value(rho: &DensityMatrix, psi: &PureState, bipartition: &Bipartition) -> Result<f64> {
    check_register(rho, psi.n_qubits(), bipartition)?;
    Ok(schmidt_alpha(psi, bipartition)? - rho.fidelity_with(psi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{haar_random_pure, random_induced_mixed};
    use crate::rng::Stream;
    use crate::states::{ghz, reference_state, target_state, werner, TargetStateParams};
    use std::f64::consts::PI;

    fn phi_plus() -> PureState {
        ghz(2, false, 1.0).unwrap()
    }

    fn split(s: &str) -> Bipartition {
        s.parse().unwrap()
    }

    #[test]
    fn exact_ppt_examples() {
        let bip = split("0/1");
        assert!((exact_ppt(&phi_plus().to_density(), &bip).unwrap() + 0.5).abs() < 1e-12);
        let prod = PureState::basis(2, 0b10).unwrap().to_density();
        assert!(exact_ppt(&prod, &bip).unwrap() >= -1e-12);
        for p in [0.0, 0.2, 1.0 / 3.0, 0.6, 1.0] {
            let v = exact_ppt(&werner(p).unwrap(), &bip).unwrap();
            assert!((v - (1.0 - 3.0 * p) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ippt_examples() {
        let bip = split("0/1");
        let phi = phi_plus();
        assert!((ippt_value(&phi.to_density(), &phi, &bip).unwrap() - 0.5).abs() < 1e-12);
        let zz = PureState::basis(2, 0).unwrap();
        assert!((ippt_value(&zz.to_density(), &zz, &bip).unwrap() - 1.0).abs() < 1e-12);

        let rho = target_state(&TargetStateParams::ideal()).unwrap();
        let mid = split("1/02");
        let v = ippt_value(&rho, &reference_state(PI), &mid).unwrap();
        assert!((v + 0.2).abs() < 1e-12);
    }

    #[test]
    fn pure_and_mixed_reference_agree() {
        let bip = split("0/12");
        let mut rng = Stream::new(4).rng();
        let rho = random_induced_mixed(3, 2, &mut rng);
        let psi = haar_random_pure(3, &mut rng);
        let a = ippt_value(&rho, &psi, &bip).unwrap();
        let b = ippt_value(&rho, &psi.to_density(), &bip).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn observable_route_matches() {
        let root = Stream::new(8);
        for i in 0..100u64 {
            let mut rng = root.child(i).rng();
            let bip = split("0/1");
            let rho = random_induced_mixed(2, 1 + (i as usize % 4), &mut rng);
            let sigma = random_induced_mixed(2, 1 + (i as usize % 3), &mut rng);
            let a = ippt_value(&rho, &sigma, &bip).unwrap();
            let b = ippt_value_via_observable(&rho, &sigma, &bip).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let bip = split("0/1");
        let v = ippt_value_via_observable(&mixed, &mixed, &bip).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        let zz = PureState::basis(2, 0).unwrap();
        assert!((ippt_value_via_observable(&zz.to_density(), &zz, &bip).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_phi_plus_contraction() {
        // n=1 with the qubit on A: Tr[(I/2 (x) I/2) Phi+] = 0.5. Built directly since a
        // Bipartition requires both sides nonempty.
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        let v = contract_doubled(&half, &half, &gates::phi_plus_unnormalized(2));
        assert!((v.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn observable_size_limit() {
        let bip = Bipartition::leading(7, 3).unwrap();
        assert!(matches!(bell_pair_observable(&bip), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn purity_examples() {
        let g = ghz(3, false, 1.0).unwrap().to_density();
        assert!((purity_criterion(&g, &split("0/12")).unwrap() + 0.5).abs() < 1e-12);
        let mm = DensityMatrix::maximally_mixed(3).unwrap();
        let v = purity_criterion(&mm, &split("0/12")).unwrap();
        assert!((v - (0.5 - 0.125)).abs() < 1e-12);
        let prod = PureState::basis(3, 0b101).unwrap().to_density();
        assert!(purity_criterion(&prod, &split("01/2")).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let phi = phi_plus();
        let v = fidelity_ew_value(&phi.to_density(), &phi, &split("0/1")).unwrap();
        assert!((v + 0.5).abs() < 1e-12);
        let rho = target_state(&TargetStateParams::ideal()).unwrap();
        let g = ghz(3, false, 1.0).unwrap();
        assert!((fidelity_ew_value(&rho, &g, &split("0/12")).unwrap() - 0.05).abs() < 1e-12);
        let prod = PureState::basis(3, 0).unwrap();
        let v = fidelity_ew_value(&rho, &prod, &split("0/12")).unwrap();
        assert!((v - (1.0 - rho.fidelity_with(&prod).unwrap())).abs() < 1e-12);
        assert!(v >= 0.0);
    }

    #[test]
    fn register_mismatch_is_error() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let psi = PureState::basis(3, 0).unwrap();
        assert!(ippt_value(&rho, &psi, &split("0/12")).is_err());
    }
}
