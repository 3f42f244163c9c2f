//! Objectives over reference states: circuit angles or a free amplitude vector.

use rand_distr::{Distribution, StandardNormal};

use super::optimize::{InitStrategy, Objective};
use crate::circuits::{parameter_shift_gradient_noisy, NoiseModel, ParamCircuit};
use crate::qmath::{norm, ComplexMatrix, C64};
use crate::rng::StreamRng;
use crate::states::DensityMatrix;

/// Cost of a reference vector: value and Wirtinger gradient `d f / d conj(psi)`.
pub trait StateCost: Sync {
    fn eval(&self, psi: &[C64]) -> (f64, Vec<C64>);
}

impl<F> StateCost for F
where
    F: Fn(&[C64]) -> (f64, Vec<C64>) + Sync,
{
    fn eval(&self, psi: &[C64]) -> (f64, Vec<C64>) {
        self(psi)
    }
}

/// `<psi|O|psi>` for a Hermitian `O`.
pub struct Expectation<'a>(pub &'a ComplexMatrix);

impl StateCost for Expectation<'_> {
    fn eval(&self, psi: &[C64]) -> (f64, Vec<C64>) {
        let g = self.0.mul_vec(psi).expect("observable matches register");
        let f: f64 = psi.iter().zip(&g).map(|(a, b)| (a.conj() * b).re).sum();
        (f, g)
    }
}

/// Cost evaluated on `U(theta)|0>`, differentiated by the adjoint method.
pub struct CircuitObjective<'a, C> {
    pub circuit: &'a ParamCircuit,
    pub cost: C,
}

impl<C: StateCost> Objective for CircuitObjective<'_, C> {
    fn dim(&self) -> usize {
        self.circuit.num_params()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.cost.eval(&self.circuit.amplitudes(x)).0
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.circuit.adjoint_gradient_unchecked(x, |psi| self.cost.eval(psi))
    }
}

/// `Tr[O sigma(theta)]` with `sigma` the noisy circuit output; parameter-shift gradient.
pub struct NoisyCircuitObjective<'a> {
    pub circuit: &'a ParamCircuit,
    pub noise: NoiseModel,
    pub observable: &'a ComplexMatrix,
}

impl NoisyCircuitObjective<'_> {
    fn eval(&self, sigma: &DensityMatrix) -> f64 {
        self.observable.trace_product(sigma.matrix()).expect("observable matches register").re
    }
}

impl Objective for NoisyCircuitObjective<'_> {
    fn dim(&self) -> usize {
        self.circuit.num_params()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let sigma = self.circuit.apply_noisy(x, &self.noise).expect("validated circuit");
        self.eval(&sigma)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let g = parameter_shift_gradient_noisy(self.circuit, x, &self.noise, |s| self.eval(s))
            .expect("validated circuit");
        (self.value(x), g)
    }
}

/// Cost on `psi = v/|v|` for an unconstrained `v`, stored as `[re_0, im_0, re_1, ...]`.
/// The cost must be homogeneous of degree two (a quadratic form, or a sum of them).
pub struct FreeReferenceObjective<C> {
    pub dim: usize,
    pub cost: C,
}

pub(crate) fn unpack(x: &[f64]) -> Vec<C64> {
    x.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

impl<C> FreeReferenceObjective<C> {
    /// Normalized reference vector encoded by `x`.
    pub fn reference(&self, x: &[f64]) -> Vec<C64> {
        let mut v = unpack(x);
        let r = norm(&v);
        v.iter_mut().for_each(|z| *z /= r);
        v
    }
}

impl<C: StateCost> Objective for FreeReferenceObjective<C> {
    fn dim(&self) -> usize {
        2 * self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.cost.eval(&self.reference(x)).0
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let r = norm(&unpack(x));
        let psi = self.reference(x);
        let (f, g) = self.cost.eval(&psi);
        let mut out = Vec::with_capacity(x.len());
        for (gk, pk) in g.iter().zip(&psi) {
            let h = (gk - pk * f) * (2.0 / r);
            out.push(h.re);
            out.push(h.im);
        }
        (f, out)
    }

    /// Gaussian vectors, i.e. Haar-random directions.
    fn initial_point(&self, _init: InitStrategy, _restart: usize, rng: &mut StreamRng) -> Vec<f64> {
        (0..2 * self.dim).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn project(&self, x: &mut [f64]) {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.0 {
            x.iter_mut().for_each(|v| *v /= r);
        }
    }
}
