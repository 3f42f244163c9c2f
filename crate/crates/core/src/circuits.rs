//! Parameterized circuits, the layered rotation/CNOT ansatz, noisy
//! density-matrix evolution and exact gradients.
//!
//! Rotations follow `r(theta) = exp(i theta G)` with `G` in {X, Z}; objectives
//! are therefore pi-periodic in every parameter and the shift rule uses
//! `+-pi/4`.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{slot_bit, ComplexMatrix, C64, I, ONE, ZERO};
use crate::states::{DensityMatrix, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Rx,
    Rz,
    Cnot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    /// One slot for rotations, `[control, target]` for CNOT.
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_index: Option<usize>,
}

impl Gate {
    pub fn rx(q: usize, param: usize) -> Self {
        Gate { kind: GateKind::Rx, qubits: vec![q], param_index: Some(param) }
    }

    pub fn rz(q: usize, param: usize) -> Self {
        Gate { kind: GateKind::Rz, qubits: vec![q], param_index: Some(param) }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate { kind: GateKind::Cnot, qubits: vec![control, target], param_index: None }
    }
}

/// Depolarizing noise applied after every gate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub depolarizing_prob_1q: f64,
    pub depolarizing_prob_2q: f64,
}

impl NoiseModel {
    pub fn uniform(p: f64) -> Result<Self> {
        let m = NoiseModel { depolarizing_prob_1q: p, depolarizing_prob_2q: p };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.depolarizing_prob_1q, self.depolarizing_prob_2q] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invariant("probability_range", format!("noise rate {p}")));
            }
        }
        Ok(())
    }
}

/// Ordered gate list over `num_params` real parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr")]
pub struct ParamCircuit {
    n_qubits: usize,
    depth: usize,
    num_params: usize,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct CircuitRepr {
    n_qubits: usize,
    depth: usize,
    num_params: usize,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitRepr> for ParamCircuit {
    type Error = Error;

    fn try_from(r: CircuitRepr) -> Result<Self> {
        ParamCircuit::new(r.n_qubits, r.depth, r.num_params, r.gates)
    }
}

impl ParamCircuit {
    /// Validates qubit indices and parameter slots. Every parameter drives
    /// exactly one gate, which keeps the two-point shift rule exact.
    pub fn new(n_qubits: usize, depth: usize, num_params: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut seen = vec![false; num_params];
        for g in &gates {
            let arity = if g.kind == GateKind::Cnot { 2 } else { 1 };
            if g.qubits.len() != arity || g.qubits.iter().any(|&q| q >= n_qubits) {
                return Err(Error::invariant("gate_qubits", format!("{g:?} on {n_qubits} qubits")));
            }
            if arity == 2 && g.qubits[0] == g.qubits[1] {
                return Err(Error::invariant("gate_qubits", "CNOT control equals target"));
            }
            match (g.kind, g.param_index) {
                (GateKind::Cnot, None) => {}
                (GateKind::Cnot, Some(_)) => {
                    return Err(Error::invariant("gate_params", "CNOT carries no parameter"))
                }
                (_, Some(p)) if p < num_params && !seen[p] => seen[p] = true,
                _ => {
                    return Err(Error::invariant(
                        "gate_params",
                        format!("rotation needs a unique parameter slot < {num_params}: {g:?}"),
                    ))
                }
            }
        }
        Ok(ParamCircuit { n_qubits, depth, num_params, gates })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::DimensionMismatch(format!(
                "circuit has {} parameters, got {}",
                self.num_params,
                theta.len()
            )));
        }
        Ok(())
    }

    /// Statevector `U(theta)|0...0>`.
    pub fn apply(&self, theta: &[f64]) -> Result<PureState> {
        self.check_theta(theta)?;
        Ok(PureState::from_normalized(self.n_qubits, self.amplitudes(theta)))
    }

    /// Unvalidated statevector, for inner loops that already checked `theta`.
    pub(crate) fn amplitudes(&self, theta: &[f64]) -> Vec<C64> {
        let mut psi = vec![ZERO; 1 << self.n_qubits];
        psi[0] = ONE;
        for g in &self.gates {
            apply_gate(&mut psi, self.n_qubits, g, theta, false);
        }
        psi
    }

    /// Density-matrix evolution with depolarizing noise after every gate.
    pub fn apply_noisy(&self, theta: &[f64], noise: &NoiseModel) -> Result<DensityMatrix> {
        self.check_theta(theta)?;
        noise.validate()?;
        let n = self.n_qubits;
        let dim = 1usize << n;
        // vec(rho) as a 2n-qubit vector: row bits are slots 0..n, column bits n..2n
        let mut v = vec![ZERO; dim * dim];
        v[0] = ONE;
        for g in &self.gates {
            apply_gate(&mut v, 2 * n, g, theta, false);
            let shifted = Gate {
                kind: g.kind,
                qubits: g.qubits.iter().map(|q| q + n).collect(),
                param_index: g.param_index,
            };
            apply_gate(&mut v, 2 * n, &shifted, theta, true);
            match g.kind {
                GateKind::Cnot => depolarize(&mut v, n, &g.qubits, noise.depolarizing_prob_2q),
                _ => depolarize(&mut v, n, &g.qubits, noise.depolarizing_prob_1q),
            }
        }
        let m = ComplexMatrix::from_vec(dim, dim, v)?;
        Ok(DensityMatrix::from_matrix_unchecked(n, m))
    }

    /// Gradient of a statevector objective by reverse-mode (adjoint)
    /// differentiation. `cost` returns the value at `psi` and the Wirtinger
    /// gradient `g = df/d conj(psi)` (so `df = 2 Re <g|d psi>`).
    pub fn adjoint_gradient<F>(&self, theta: &[f64], cost: F) -> Result<(f64, Vec<f64>)>
    where
        F: FnOnce(&[C64]) -> (f64, Vec<C64>),
    {
        self.check_theta(theta)?;
        Ok(self.adjoint_gradient_unchecked(theta, cost))
    }

    pub(crate) fn adjoint_gradient_unchecked<F>(&self, theta: &[f64], cost: F) -> (f64, Vec<f64>)
    where
        F: FnOnce(&[C64]) -> (f64, Vec<C64>),
    {
        let n = self.n_qubits;
        let mut phi = self.amplitudes(theta);
        let (value, mut lambda) = cost(&phi);
        let mut grad = vec![0.0; self.num_params];
        let mut scratch = vec![ZERO; phi.len()];
        for g in self.gates.iter().rev() {
            if let Some(p) = g.param_index {
                scratch.copy_from_slice(&phi);
                apply_generator(&mut scratch, n, g);
                // 2 Re <lambda| i G phi>
                let ov: C64 = lambda.iter().zip(&scratch).map(|(l, s)| l.conj() * s).sum();
                grad[p] += 2.0 * ov.re;
            }
            apply_gate_inverse(&mut phi, n, g, theta);
            apply_gate_inverse(&mut lambda, n, g, theta);
        }
        (value, grad)
    }
}

/// `D` repetitions of: RX on every qubit, RZ on every qubit, then the CNOT
/// chain `i -> i+1`. Parameters are numbered in gate order.
pub fn build_ansatz(n_qubits: usize, depth: usize) -> Result<ParamCircuit> {
    if n_qubits == 0 || n_qubits > crate::qmath::MAX_QUBITS {
        return Err(Error::SizeLimit(format!("{n_qubits} qubits")));
    }
    let mut gates = Vec::with_capacity(depth * (3 * n_qubits - 1));
    let mut p = 0;
    for _ in 0..depth {
        for q in 0..n_qubits {
            gates.push(Gate::rx(q, p));
            p += 1;
        }
        for q in 0..n_qubits {
            gates.push(Gate::rz(q, p));
            p += 1;
        }
        for q in 0..n_qubits.saturating_sub(1) {
            gates.push(Gate::cnot(q, q + 1));
        }
    }
    ParamCircuit::new(n_qubits, depth, 2 * n_qubits * depth, gates)
}

#[inline]
fn rotation_entries(kind: GateKind, theta: f64) -> [C64; 4] {
    let (s, c) = theta.sin_cos();
    match kind {
        // exp(i theta X)
        GateKind::Rx => [C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0)],
        // exp(i theta Z)
        GateKind::Rz => [C64::new(c, s), ZERO, ZERO, C64::new(c, -s)],
        GateKind::Cnot => unreachable!(),
    }
}

fn apply_1q(psi: &mut [C64], n: usize, q: usize, u: [C64; 4]) {
    let bit = slot_bit(n, q);
    for i in 0..psi.len() {
        if i & bit == 0 {
            let (a, b) = (psi[i], psi[i | bit]);
            psi[i] = u[0] * a + u[1] * b;
            psi[i | bit] = u[2] * a + u[3] * b;
        }
    }
}

fn apply_cnot(psi: &mut [C64], n: usize, control: usize, target: usize) {
    let cb = slot_bit(n, control);
    let tb = slot_bit(n, target);
    for i in 0..psi.len() {
        if i & cb != 0 && i & tb == 0 {
            psi.swap(i, i | tb);
        }
    }
}

fn apply_gate(psi: &mut [C64], n: usize, g: &Gate, theta: &[f64], conjugate: bool) {
    match g.kind {
        GateKind::Cnot => apply_cnot(psi, n, g.qubits[0], g.qubits[1]),
        kind => {
            let mut u = rotation_entries(kind, theta[g.param_index.expect("validated")]);
            if conjugate {
                u.iter_mut().for_each(|z| *z = z.conj());
            }
            apply_1q(psi, n, g.qubits[0], u);
        }
    }
}

fn apply_gate_inverse(psi: &mut [C64], n: usize, g: &Gate, theta: &[f64]) {
    match g.kind {
        GateKind::Cnot => apply_cnot(psi, n, g.qubits[0], g.qubits[1]),
        kind => {
            let u = rotation_entries(kind, -theta[g.param_index.expect("validated")]);
            apply_1q(psi, n, g.qubits[0], u);
        }
    }
}

/// `psi <- i G psi` for the rotation's generator.
fn apply_generator(psi: &mut [C64], n: usize, g: &Gate) {
    let u = match g.kind {
        GateKind::Rx => [ZERO, I, I, ZERO],
        GateKind::Rz => [I, ZERO, ZERO, -I],
        GateKind::Cnot => unreachable!(),
    };
    apply_1q(psi, n, g.qubits[0], u);
}

/// Replaces the marginal on `qubits` by the maximally mixed state with
/// probability `p`. `v` is vec(rho) on an `n`-qubit register.
fn depolarize(v: &mut [C64], n: usize, qubits: &[usize], p: f64) {
    if p == 0.0 {
        return;
    }
    let row_bits: Vec<usize> = qubits.iter().map(|&q| slot_bit(2 * n, q)).collect();
    let col_bits: Vec<usize> = qubits.iter().map(|&q| slot_bit(2 * n, q + n)).collect();
    let mask: usize = row_bits.iter().chain(&col_bits).sum();
    let k = qubits.len();
    let local = 1usize << k;
    let pattern = |a: usize| -> usize {
        (0..k).filter(|j| (a >> (k - 1 - j)) & 1 == 1).map(|j| row_bits[j] | col_bits[j]).sum()
    };
    let diag_patterns: Vec<usize> = (0..local).map(pattern).collect();
    for base in 0..v.len() {
        if base & mask != 0 {
            continue;
        }
        let traced: C64 = diag_patterns.iter().map(|&d| v[base | d]).sum();
        let fill = traced * (p / local as f64);
        // off-diagonal (in the noisy qubits) entries only shrink
        for off in 0..(1usize << (2 * k)) {
            let idx = base
                | (0..k)
                    .map(|j| {
                        let rb = (off >> (2 * k - 1 - j)) & 1;
                        let cb = (off >> (k - 1 - j)) & 1;
                        rb * row_bits[j] + cb * col_bits[j]
                    })
                    .sum::<usize>();
            v[idx] *= 1.0 - p;
        }
        for &d in &diag_patterns {
            v[base | d] += fill;
        }
    }
}

/// Two-point shift rule `f(theta + pi/4 e_k) - f(theta - pi/4 e_k)` for
/// any objective of the parameters.
fn shift_rule(theta: &[f64], mut eval: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let mut shifted = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        shifted[k] = theta[k] + FRAC_PI_4;
        let plus = eval(&shifted)?;
        shifted[k] = theta[k] - FRAC_PI_4;
        let minus = eval(&shifted)?;
        shifted[k] = theta[k];
        grad.push(plus - minus);
    }
    Ok(grad)
}

/// Parameter-shift gradient of `objective(U(theta)|0>)`. Exact when the
/// objective is the expectation of a fixed Hermitian observable.
pub fn parameter_shift_gradient<F>(circuit: &ParamCircuit, theta: &[f64], objective: F) -> Result<Vec<f64>>
where
    F: Fn(&PureState) -> f64,
{
    circuit.check_theta(theta)?;
    shift_rule(theta, |t| Ok(objective(&circuit.apply(t)?)))
}

/// Parameter-shift gradient through the noisy density-matrix evolution.
pub fn parameter_shift_gradient_noisy<F>(
    circuit: &ParamCircuit,
    theta: &[f64],
    noise: &NoiseModel,
    objective: F,
) -> Result<Vec<f64>>
where
    F: Fn(&DensityMatrix) -> f64,
{
    circuit.check_theta(theta)?;
    shift_rule(theta, |t| Ok(objective(&circuit.apply_noisy(t, noise)?)))
}
