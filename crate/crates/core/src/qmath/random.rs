use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{norm, ComplexMatrix, C64};
use crate::states::{DensityMatrix, PureState};

/// Unit vector drawn from the unitarily invariant measure on `C^dim`
/// (i.i.d. complex Gaussian entries, normalized).
pub fn haar_random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    assert!(dim >= 1, "dimension must be positive");
    loop {
        let mut v: Vec<C64> =
            (0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let nrm = norm(&v);
        if nrm > 0.0 {
            v.iter_mut().for_each(|z| *z /= nrm);
            return v;
        }
    }
}

/// Haar-random pure state of `n_qubits`.
pub fn haar_random_pure<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> PureState {
    PureState::from_normalized(n_qubits, haar_random_vector(1 << n_qubits, rng))
}

/// Mixed state from the induced measure: a Haar pure state on `2^n * k`
/// with the `k`-dimensional environment (the last slot) traced out.
pub fn random_induced_mixed<R: Rng + ?Sized>(n_qubits: usize, k: usize, rng: &mut R) -> DensityMatrix {
    assert!(k >= 1, "environment dimension must be positive");
    let dim = 1usize << n_qubits;
    let psi = haar_random_vector(dim * k, rng);
    let mut rho = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        let row = &psi[r * k..(r + 1) * k];
        for c in r..dim {
            let col = &psi[c * k..(c + 1) * k];
            let v: C64 = row.iter().zip(col).map(|(a, b)| a * b.conj()).sum();
            rho[(r, c)] = v;
            rho[(c, r)] = v.conj();
        }
    }
    DensityMatrix::from_matrix_unchecked(n_qubits, rho)
}

/// Sample from the flat Dirichlet distribution on the `n`-simplex.
pub fn uniform_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::ops::{hermitian_spectrum, partial_trace_dims};
    use crate::rng::Stream;

    #[test]
    fn samples_are_unit_norm_and_reproducible() {
        let s = Stream::new(3);
        let mut rng = s.rng();
        for _ in 0..100 {
            assert!((norm(&haar_random_vector(7, &mut rng)) - 1.0).abs() < 1e-12);
        }
        let a = haar_random_vector(16, &mut s.child(1).rng());
        let b = haar_random_vector(16, &mut s.child(1).rng());
        assert_eq!(a, b);
    }

    #[test]
    fn first_moment_is_uniform() {
        let d = 6;
        let n = 100_000;
        let mut rng = Stream::new(17).rng();
        let xs: Vec<f64> = (0..n).map(|_| haar_random_vector(d, &mut rng)[0].norm_sqr()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0 / d as f64).abs() < 5.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn second_moment_matches_haar_value() {
        let d = 8;
        let n = 100_000;
        let mut rng = Stream::new(23).rng();
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let v = haar_random_vector(d, &mut rng);
                v[1].norm_sqr() * v[4].norm_sqr()
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let expected = 1.0 / (d * (d + 1)) as f64;
        assert!((mean - expected).abs() < 5.0 * se, "mean {mean} expected {expected}");
    }

    #[test]
    fn induced_k1_is_pure() {
        let mut rng = Stream::new(2).rng();
        let rho = random_induced_mixed(3, 1, &mut rng);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn induced_matches_explicit_partial_trace() {
        let s = Stream::new(9);
        let rho = random_induced_mixed(2, 3, &mut s.rng());
        let psi = haar_random_vector(4 * 3, &mut s.rng());
        let full = ComplexMatrix::outer(&psi, &psi);
        let red = partial_trace_dims(&full, &[2, 2, 3], &[0, 1]).unwrap();
        assert!(red.max_abs_diff(rho.matrix()) < 1e-14);
        assert!(hermitian_spectrum(rho.matrix()).unwrap()[0] >= -1e-12);
    }

    #[test]
    fn induced_mean_purity() {
        // E[Tr rho^2] = (d + k) / (d k + 1) for the induced measure
        let (n, k) = (4usize, 8usize);
        let d = 1usize << n;
        let samples = 10_000;
        let root = Stream::new(41);
        let xs: Vec<f64> = (0..samples)
            .map(|i| random_induced_mixed(n, k, &mut root.child(i as u64).rng()).purity())
            .collect();
        let mean = xs.iter().sum::<f64>() / samples as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        let se = (var / samples as f64).sqrt();
        let expected = (d + k) as f64 / (d * k + 1) as f64;
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} expected {expected} se {se}");
    }

    #[test]
    fn simplex_weights_sum_to_one() {
        let mut rng = Stream::new(1).rng();
        let w = uniform_simplex(5, &mut rng);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(w.iter().all(|&x| x >= 0.0));
    }
}
