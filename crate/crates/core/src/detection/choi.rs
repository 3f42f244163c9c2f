//! Witnesses built from positive maps through their Choi matrix.
//!
//! Convention: `Lambda = sum_ij |i><j| (x) N(|i><j|)` with the input factor
//! first, so `N(X) = Tr_1[Lambda (X^T (x) I)]`. The two-copy witness acting on
//! (target A, reference A) is then `W = Lambda^{T_1}`.

use super::criteria::{check_register, contract_doubled};
use crate::error::{Error, Result};
use crate::qmath::{gather_bits, slot_bit, Bipartition, ComplexMatrix, C64, MAX_QUBITS, ZERO};
use crate::states::{DensityMatrix, PureState};

/// Choi matrix of a linear map on `d x d` matrices.
pub fn choi_matrix(d: usize, map: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut unit = ComplexMatrix::zeros(d, d);
            unit[(i, j)] = C64::new(1.0, 0.0);
            let image = map(&unit);
            if image.rows() != d || image.cols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "map must send {d}x{d} to {d}x{d}, got {}x{}",
                    image.rows(),
                    image.cols()
                )));
            }
            for a in 0..d {
                for b in 0..d {
                    out[(i * d + a, j * d + b)] = image[(a, b)];
                }
            }
        }
    }
    Ok(out)
}

fn choi_dim(choi: &ComplexMatrix) -> Result<usize> {
    let d = (choi.rows() as f64).sqrt().round() as usize;
    if !choi.is_square() || d * d != choi.rows() {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix {}x{} is not d^2 x d^2",
            choi.rows(),
            choi.cols()
        )));
    }
    Ok(d)
}

/// `N(X)` recovered from the Choi matrix.
pub fn apply_via_choi(choi: &ComplexMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = choi_dim(choi)?;
    if x.rows() != d || x.cols() != d {
        return Err(Error::DimensionMismatch(format!("input must be {d}x{d}")));
    }
    Ok(ComplexMatrix::from_fn(d, d, |c, cp| {
        let mut acc = ZERO;
        for a in 0..d {
            for ap in 0..d {
                acc += choi[(a * d + c, ap * d + cp)] * x[(a, ap)];
            }
        }
        acc
    }))
}

/// `W = Lambda^{T_1}`: transpose on the input factor.
pub fn witness_from_choi(choi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = choi_dim(choi)?;
    Ok(ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, a) = (r / d, r % d);
        let (j, b) = (c / d, c % d);
        choi[(j * d + a, i * d + b)]
    }))
}

fn check_choi_side(choi: &ComplexMatrix, bipartition: &Bipartition) -> Result<usize> {
    let d = choi_dim(choi)?;
    if d != 1 << bipartition.n_a() {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix acts on dimension {d}, subsystem A has {}",
            1usize << bipartition.n_a()
        )));
    }
    Ok(d)
}

/// `<psi| (N_A (x) id_B)(rho) |psi>`, the direct evaluation.
pub fn choi_witness_value(
    rho: &DensityMatrix,
    psi: &PureState,
    choi: &ComplexMatrix,
    bipartition: &Bipartition,
) -> Result<f64> {
    check_register(rho, psi.n_qubits(), bipartition)?;
    check_choi_side(choi, bipartition)?;
    let n = rho.n_qubits();
    let dim = rho.dim();
    let a_bits: Vec<usize> = bipartition.a_qubits().iter().map(|&q| slot_bit(n, q)).collect();
    let scatter_a = |idx_b: usize, a: usize| -> usize {
        let na = a_bits.len();
        a_bits
            .iter()
            .enumerate()
            .filter(|(j, _)| (a >> (na - 1 - j)) & 1 == 1)
            .fold(idx_b, |acc, (_, &bit)| acc | bit)
    };
    let mask_a = bipartition.mask(crate::qmath::Subsystem::A);
    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(dim, dim);
    let da = 1usize << bipartition.n_a();
    for row in 0..dim {
        for col in 0..dim {
            let m_rc = m[(row, col)];
            if m_rc == ZERO {
                continue;
            }
            let a = gather_bits(row, n, bipartition.a_qubits());
            let ap = gather_bits(col, n, bipartition.a_qubits());
            let (rb, cb) = (row & !mask_a, col & !mask_a);
            for c in 0..da {
                for cp in 0..da {
                    let l = choi[(a * da + c, ap * da + cp)];
                    if l != ZERO {
                        out[(scatter_a(rb, c), scatter_a(cb, cp))] += l * m_rc;
                    }
                }
            }
        }
    }
    Ok(out.expectation(psi.amplitudes()).re)
}

/// The same quantity as a two-copy observable `W_A (x) S_B` on `rho (x) psi`.
pub fn choi_witness_value_via_swap(
    rho: &DensityMatrix,
    psi: &PureState,
    choi: &ComplexMatrix,
    bipartition: &Bipartition,
) -> Result<f64> {
    check_register(rho, psi.n_qubits(), bipartition)?;
    let da = check_choi_side(choi, bipartition)?;
    let n = rho.n_qubits();
    if 2 * n > MAX_QUBITS {
        return Err(Error::SizeLimit(format!("doubled register of {} qubits", 2 * n)));
    }
    let w = witness_from_choi(choi)?;
    let d = rho.dim();
    let a = bipartition.a_qubits();
    let mask_b = bipartition.mask(crate::qmath::Subsystem::B);
    let obs = ComplexMatrix::from_fn(d * d, d * d, |row, col| {
        let (xr, yr) = (row / d, row % d);
        let (xc, yc) = (col / d, col % d);
        // S_B: target B of the row equals reference B of the column and vice versa
        if xr & mask_b != yc & mask_b || yr & mask_b != xc & mask_b {
            return ZERO;
        }
        let wr = gather_bits(xr, n, a) * da + gather_bits(yr, n, a);
        let wc = gather_bits(xc, n, a) * da + gather_bits(yc, n, a);
        w[(wr, wc)]
    });
    Ok(contract_doubled(rho.matrix(), &psi.to_density().into_matrix(), &obs).re)
}
