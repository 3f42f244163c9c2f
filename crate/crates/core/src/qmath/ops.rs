use nalgebra::DMatrix;

use super::bipartition::{Bipartition, Subsystem};
use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::states::PureState;

/// Inputs within this elementwise distance of their adjoint count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as numerically positive semidefinite.
pub const PSD_TOL: f64 = -1e-12;

fn check_qubit_square(m: &ComplexMatrix, n_qubits: usize) -> Result<()> {
    let dim = 1usize << n_qubits;
    if !m.is_square() || m.rows() != dim {
        return Err(Error::DimensionMismatch(format!(
            "expected {dim}x{dim} for {n_qubits} qubits, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Traces out every qubit slot not listed in `keep`. Kept slots appear in
/// ascending order in the result.
pub fn partial_trace(m: &ComplexMatrix, n_qubits: usize, keep: &[usize]) -> Result<ComplexMatrix> {
    check_qubit_square(m, n_qubits)?;
    if keep.iter().any(|&q| q >= n_qubits) {
        return Err(Error::DimensionMismatch(format!("keep set {keep:?} outside 0..{n_qubits}")));
    }
    partial_trace_dims(m, &vec![2; n_qubits], keep)
}

/// Partial trace over a register of arbitrary local dimensions `dims`
/// (slot 0 outermost). Used for the `2^n x k` environment case.
pub fn partial_trace_dims(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total {
        return Err(Error::DimensionMismatch(format!(
            "matrix {}x{} does not match subsystem dims {dims:?}",
            m.rows(),
            m.cols()
        )));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&s| s >= dims.len()) {
        return Err(Error::DimensionMismatch(format!("keep set {keep:?} outside {} slots", dims.len())));
    }
    let keep_dim: usize = keep.iter().map(|&s| dims[s]).product();
    let traced_dim = total / keep_dim;

    // digits of each full index, split into (kept index, traced index)
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(keep_dim); traced_dim];
    let mut digits = vec![0usize; dims.len()];
    for full in 0..total {
        let mut rem = full;
        for s in (0..dims.len()).rev() {
            digits[s] = rem % dims[s];
            rem /= dims[s];
        }
        let (mut k, mut t) = (0, 0);
        for (s, &d) in digits.iter().enumerate() {
            if keep.binary_search(&s).is_ok() {
                k = k * dims[s] + d;
            } else {
                t = t * dims[s] + d;
            }
        }
        groups[t].push((k, full));
    }

    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
    for group in &groups {
        for &(kr, fr) in group {
            for &(kc, fc) in group {
                out[(kr, kc)] += m[(fr, fc)];
            }
        }
    }
    Ok(out)
}

/// Transposes the tensor indices of one side of the bipartition.
pub fn partial_transpose(
    m: &ComplexMatrix,
    bipartition: &Bipartition,
    transpose_on: Subsystem,
) -> Result<ComplexMatrix> {
    let n = bipartition.n_qubits();
    check_qubit_square(m, n)?;
    let mask = bipartition.mask(transpose_on);
    let dim = 1usize << n;
    Ok(ComplexMatrix::from_fn(dim, dim, |r, c| {
        let r2 = (r & !mask) | (c & mask);
        let c2 = (c & !mask) | (r & mask);
        m[(r2, c2)]
    }))
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching eigenvectors as columns.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("spectrum of non-square {}x{}", m.rows(), m.cols())));
    }
    let err = m.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    let a = m.to_nalgebra();
    let sym: DMatrix<C64> = (&a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let dim = m.rows();
    let vectors = ComplexMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_spectrum(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("spectrum of non-square {}x{}", m.rows(), m.cols())));
    }
    let err = m.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    let a = m.to_nalgebra();
    let sym: DMatrix<C64> = (&a + a.adjoint()).scale(0.5);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_spectrum(m)?[0])
}

/// Amplitudes reshaped into the `2^n_A x 2^n_B` coefficient matrix.
fn coefficient_matrix(amps: &[C64], bipartition: &Bipartition) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(1 << bipartition.n_a(), 1 << bipartition.n_b(), ZERO);
    for (idx, (a, b)) in bipartition.split_indices().into_iter().enumerate() {
        m[(a, b)] = amps[idx];
    }
    m
}

/// Top eigenpair of a small Hermitian Gram matrix.
fn top_eigenpair(g: DMatrix<C64>) -> (f64, nalgebra::DVector<C64>) {
    let eig = g.symmetric_eigen();
    let (imax, &vmax) =
        eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty spectrum");
    (vmax, eig.eigenvectors.column(imax).into_owned())
}

/// Largest squared Schmidt coefficient of `psi` across the bipartition.
pub fn schmidt_alpha(psi: &PureState, bipartition: &Bipartition) -> Result<f64> {
    if psi.n_qubits() != bipartition.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit state with {}-qubit bipartition",
            psi.n_qubits(),
            bipartition.n_qubits()
        )));
    }
    Ok(schmidt_alpha_with_gradient(psi.amplitudes(), bipartition).0)
}

/// `alpha(psi)` together with its Wirtinger gradient `d alpha / d conj(psi)`
/// (so that `d alpha = 2 Re <g|d psi>`). Amplitudes need not be normalized.
pub fn schmidt_alpha_with_gradient(amps: &[C64], bipartition: &Bipartition) -> (f64, Vec<C64>) {
    let m = coefficient_matrix(amps, bipartition);
    let grad_m = if m.nrows() <= m.ncols() {
        let (alpha, u) = top_eigenpair(&m * m.adjoint());
        let g = &u * u.adjoint() * &m;
        (alpha, g)
    } else {
        let (alpha, v) = top_eigenpair(m.adjoint() * &m);
        let g = &m * &v * v.adjoint();
        (alpha, g)
    };
    let (alpha, g) = grad_m;
    let grad = bipartition.split_indices().into_iter().map(|(a, b)| g[(a, b)]).collect();
    (alpha, grad)
}
