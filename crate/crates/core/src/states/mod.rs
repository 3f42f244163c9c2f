//! Quantum state carriers, the named states used throughout the experiments,
//! and synthetic ensembles for testing.

mod io;

pub use io::{load_state, save_state, State, StateKind, StateSpec};

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{
    haar_random_vector, min_eigenvalue, norm, uniform_simplex, Bipartition, ComplexMatrix, C64, MAX_QUBITS,
    ONE, ZERO,
};

/// Tolerances for accepting a matrix as a physical state.
pub const TRACE_TOL: f64 = 1e-9;
pub const STATE_HERMITIAN_TOL: f64 = 1e-10;
pub const STATE_PSD_TOL: f64 = -1e-9;
pub const NORM_TOL: f64 = 1e-10;

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::SizeLimit(format!("{n_qubits} qubits (supported: 1..={MAX_QUBITS})")));
    }
    Ok(())
}

/// Normalized amplitude vector on `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {n_qubits} qubits",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invariant("finite", "amplitudes contain NaN or Inf"));
        }
        let nrm = norm(&amplitudes);
        if (nrm - 1.0).abs() > NORM_TOL {
            return Err(Error::invariant("unit_norm", format!("norm is {nrm}")));
        }
        Ok(PureState { n_qubits, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let nrm = norm(&amplitudes);
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::invariant("unit_norm", "cannot normalize a zero vector"));
        }
        amplitudes.iter_mut().for_each(|z| *z /= nrm);
        Self::new(n_qubits, amplitudes)
    }

    pub(crate) fn from_normalized(n_qubits: usize, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n_qubits);
        PureState { n_qubits, amplitudes }
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(PureState::from_normalized(n_qubits, amps))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace operator on `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates every physical invariant; the error names the first one violated.
    pub fn new(n_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if !matrix.is_square() || matrix.rows() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for {n_qubits} qubits",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invariant("finite", "entries contain NaN or Inf"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::invariant("unit_trace", format!("trace is {tr}")));
        }
        let herr = matrix.hermiticity_error();
        if herr > STATE_HERMITIAN_TOL {
            return Err(Error::invariant("hermitian", format!("max deviation from adjoint {herr:.3e}")));
        }
        let lmin = min_eigenvalue(&matrix)?;
        if lmin < STATE_PSD_TOL {
            return Err(Error::invariant("positive_semidefinite", format!("smallest eigenvalue {lmin:.3e}")));
        }
        Ok(DensityMatrix { n_qubits, matrix })
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), 1 << n_qubits);
        DensityMatrix { n_qubits, matrix }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        Ok(DensityMatrix { n_qubits, matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `Tr(rho^2)`
    pub fn purity(&self) -> f64 {
        // Hermitian: Tr(rho^2) = sum |rho_ij|^2
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<psi|rho|psi>`
    pub fn fidelity_with(&self, psi: &PureState) -> Result<f64> {
        if psi.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit state against {}-qubit density matrix",
                psi.n_qubits(),
                self.n_qubits
            )));
        }
        Ok(self.matrix.expectation(psi.amplitudes()).re)
    }

    /// Convex combination `sum_i w_i rho_i` of states on the same register.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let n = first.1.n_qubits;
        let mut m = ComplexMatrix::zeros(first.1.dim(), first.1.dim());
        for (w, rho) in parts {
            if rho.n_qubits != n {
                return Err(Error::DimensionMismatch("mixture of different registers".into()));
            }
            m.add_scaled(&rho.matrix, C64::new(*w, 0.0))?;
        }
        DensityMatrix::new(n, m)
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(psi: &PureState) -> Self {
        psi.to_density()
    }
}

/// `(|0x> + sign |1x̄>)/sqrt 2`: all-zeros GHZ, or with the first slot
/// flipped, `(|10..0> + sign |01..1>)/sqrt 2`.
pub fn ghz(n: usize, flip_first: bool, sign: f64) -> Result<PureState> {
    if n < 2 {
        return Err(Error::InvalidArgument("GHZ needs at least 2 qubits".into()));
    }
    check_qubits(n)?;
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidArgument(format!("GHZ sign must be +1 or -1, got {sign}")));
    }
    let dim = 1usize << n;
    let lo = if flip_first { dim >> 1 } else { 0 };
    let hi = (dim - 1) ^ lo;
    let mut amps = vec![ZERO; dim];
    amps[lo] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[hi] = C64::new(sign * FRAC_1_SQRT_2, 0.0);
    Ok(PureState::from_normalized(n, amps))
}

/// Weights of the four phase-flipped GHZ components of the three-qubit
/// target state, plus an optional residual of other flip components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetStateParams {
    pub f1_plus: f64,
    pub f1_minus: f64,
    pub f2_plus: f64,
    pub f2_minus: f64,
    #[serde(default)]
    pub f_prime: f64,
}

impl Default for TargetStateParams {
    fn default() -> Self {
        Self::ideal()
    }
}

impl TargetStateParams {
    /// Design values `F1+ = F2+ = 0.9`, `F1- = F2- = 0.1`.
    pub fn ideal() -> Self {
        TargetStateParams { f1_plus: 0.9, f1_minus: 0.1, f2_plus: 0.9, f2_minus: 0.1, f_prime: 0.0 }
    }

    /// Measured component proportions (each reported as `F/2`); whatever
    /// trace they leave is assigned to the residual term.
    pub fn experimental() -> Self {
        Self::from_proportions(0.418, 0.060, 0.448, 0.035)
    }

    /// Builds parameters from measured proportions `F/2` of the four main
    /// components. The missing weight goes to `f_prime` so the total is 1.
    pub fn from_proportions(p1_plus: f64, p1_minus: f64, p2_plus: f64, p2_minus: f64) -> Self {
        let main = p1_plus + p1_minus + p2_plus + p2_minus;
        TargetStateParams {
            f1_plus: 2.0 * p1_plus,
            f1_minus: 2.0 * p1_minus,
            f2_plus: 2.0 * p2_plus,
            f2_minus: 2.0 * p2_minus,
            f_prime: (2.0 * (1.0 - main)).max(0.0),
        }
    }

    /// Trace carried by the four main projectors.
    pub fn main_weight(&self) -> f64 {
        0.5 * (self.f1_plus + self.f1_minus + self.f2_plus + self.f2_minus)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.f1_plus, self.f1_minus, self.f2_plus, self.f2_minus, self.f_prime];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invariant("target_weights_nonnegative", format!("weights {all:?}")));
        }
        if self.f_prime == 0.0 {
            let s1 = self.f1_plus + self.f1_minus;
            let s2 = self.f2_plus + self.f2_minus;
            if (s1 - 1.0).abs() > 1e-9 || (s2 - 1.0).abs() > 1e-9 {
                return Err(Error::invariant(
                    "target_weights_normalized",
                    format!("F1+ + F1- = {s1}, F2+ + F2- = {s2}; both must be 1 without residual"),
                ));
            }
        } else if self.main_weight() + 0.5 * self.f_prime <= 0.0 {
            return Err(Error::invariant("target_weights_normalized", "total weight is zero"));
        }
        Ok(())
    }
}

/// Uniform mixture of the GHZ-basis projectors outside the four main
/// components: `(|001> ± |110>)` and `(|010> ± |101>)`.
pub fn residual_flip_mixture() -> DensityMatrix {
    let parts: Vec<DensityMatrix> = [0b001usize, 0b010]
        .iter()
        .flat_map(|&lo| {
            [1.0, -1.0].into_iter().map(move |sign| {
                let mut amps = vec![ZERO; 8];
                amps[lo] = C64::new(FRAC_1_SQRT_2, 0.0);
                amps[7 ^ lo] = C64::new(sign * FRAC_1_SQRT_2, 0.0);
                PureState::from_normalized(3, amps).to_density()
            })
        })
        .collect();
    let weighted: Vec<(f64, &DensityMatrix)> = parts.iter().map(|p| (0.25, p)).collect();
    DensityMatrix::mixture(&weighted).expect("valid residual mixture")
}

/// Three-qubit target: `0.5 (F1+ P1+ + F1- P1-) + 0.5 (F2+ P2+ + F2- P2-)`
/// with normalized GHZ projectors `P`, plus `(F'/2)` times the residual
/// mixture, renormalized to unit trace.
pub fn target_state(params: &TargetStateParams) -> Result<DensityMatrix> {
    params.validate()?;
    let comps = [
        (0.5 * params.f1_plus, ghz(3, false, 1.0)?),
        (0.5 * params.f1_minus, ghz(3, false, -1.0)?),
        (0.5 * params.f2_plus, ghz(3, true, 1.0)?),
        (0.5 * params.f2_minus, ghz(3, true, -1.0)?),
    ];
    let mut m = ComplexMatrix::zeros(8, 8);
    for (w, psi) in &comps {
        m.add_scaled(&psi.to_density().into_matrix(), C64::new(*w, 0.0))?;
    }
    if params.f_prime > 0.0 {
        m.add_scaled(residual_flip_mixture().matrix(), C64::new(0.5 * params.f_prime, 0.0))?;
    }
    let tr = m.trace().re;
    DensityMatrix::new(3, m.scale_real(1.0 / tr))
}

/// `(|010> + e^{i dtheta} |101>)/sqrt 2`
pub fn reference_state(delta_theta: f64) -> PureState {
    let mut amps = vec![ZERO; 8];
    amps[0b010] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[0b101] = C64::from_polar(FRAC_1_SQRT_2, delta_theta);
    PureState::from_normalized(3, amps)
}

/// Two-qubit Werner state `p |Psi-><Psi-| + (1-p) I/4`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invariant("probability_range", format!("p = {p}")));
    }
    let s = FRAC_1_SQRT_2;
    let singlet = PureState::from_normalized(2, vec![ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO]);
    let mut m = singlet.to_density().into_matrix().scale_real(p);
    m.add_scaled(&ComplexMatrix::identity(4), C64::new((1.0 - p) / 4.0, 0.0))?;
    Ok(DensityMatrix::from_matrix_unchecked(2, m))
}

/// Product of pure factors on A and B, laid out on the full register.
pub fn product_state(bipartition: &Bipartition, a: &[C64], b: &[C64]) -> Result<PureState> {
    if a.len() != 1 << bipartition.n_a() || b.len() != 1 << bipartition.n_b() {
        return Err(Error::DimensionMismatch("factor lengths do not match bipartition".into()));
    }
    let amps = bipartition.split_indices().into_iter().map(|(ia, ib)| a[ia] * b[ib]).collect();
    PureState::new(bipartition.n_qubits(), amps)
}

/// Separable state `sum_i p_i |a_i><a_i| (x) |b_i><b_i|` with Haar-random
/// pure factors and flat-Dirichlet weights.
pub fn random_separable<R: Rng + ?Sized>(
    bipartition: &Bipartition,
    num_terms: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if num_terms == 0 {
        return Err(Error::InvalidArgument("num_terms must be at least 1".into()));
    }
    let weights = uniform_simplex(num_terms, rng);
    let dim = 1usize << bipartition.n_qubits();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for w in weights {
        let a = haar_random_vector(1 << bipartition.n_a(), rng);
        let b = haar_random_vector(1 << bipartition.n_b(), rng);
        let psi = product_state(bipartition, &a, &b)?;
        m.add_scaled(&psi.to_density().into_matrix(), C64::new(w, 0.0))?;
    }
    Ok(DensityMatrix::from_matrix_unchecked(bipartition.n_qubits(), m))
}
