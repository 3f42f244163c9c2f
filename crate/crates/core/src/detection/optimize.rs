use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::{Stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerMethod {
    GradientDescent,
    Adam,
    Spsa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LearningRate {
    Constant {
        rate: f64,
    },
    /// Cosine decay from `initial` to `final_rate` over the iteration budget.
    Cosine {
        initial: f64,
        final_rate: f64,
    },
}

impl LearningRate {
    pub fn at(&self, step: usize, total: usize) -> f64 {
        match *self {
            LearningRate::Constant { rate } => rate,
            LearningRate::Cosine { initial, final_rate } => {
                let frac = if total <= 1 { 0.0 } else { step as f64 / (total - 1) as f64 };
                final_rate + 0.5 * (initial - final_rate) * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }

    fn initial(&self) -> f64 {
        match *self {
            LearningRate::Constant { rate } => rate,
            LearningRate::Cosine { initial, .. } => initial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Restart 0 starts from the origin, the rest uniformly at random.
    Zeros,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    pub max_iterations: usize,
    pub learning_rate: LearningRate,
    pub restarts: usize,
    pub init: InitStrategy,
    /// Stop a restart once the gradient norm falls below this.
    pub convergence_tol: f64,
    /// Size of the SPSA perturbation.
    pub spsa_perturbation: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: OptimizerMethod::Adam,
            max_iterations: 200,
            learning_rate: LearningRate::Cosine { initial: 0.1, final_rate: 0.001 },
            restarts: 8,
            init: InitStrategy::Zeros,
            convergence_tol: 1e-9,
            spsa_perturbation: 0.1,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let lr_ok = match self.learning_rate {
            LearningRate::Constant { rate } => rate.is_finite() && rate > 0.0,
            LearningRate::Cosine { initial, final_rate } => {
                initial.is_finite() && final_rate.is_finite() && initial > 0.0 && final_rate >= 0.0
            }
        };
        if !lr_ok {
            return Err(Error::InvalidArgument("learning rate must be positive and finite".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("at least one restart is required".into()));
        }
        let bad = |x: f64, floor_ok: bool| x.is_nan() || x < 0.0 || (!floor_ok && x == 0.0);
        if bad(self.convergence_tol, true) || bad(self.spsa_perturbation, false) {
            return Err(Error::InvalidArgument("tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A scalar function of real parameters to be minimised.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>);

    /// One stochastic evaluation; exact objectives ignore the generator.
    fn sample_value(&self, x: &[f64], _rng: &mut StreamRng) -> f64 {
        self.value(x)
    }

    /// Starting point for restart `restart`; the default draws angles in `[0, pi)`.
    fn initial_point(&self, init: InitStrategy, restart: usize, rng: &mut StreamRng) -> Vec<f64> {
        if init == InitStrategy::Zeros && restart == 0 {
            return vec![0.0; self.dim()];
        }
        (0..self.dim()).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect()
    }

    /// Map applied after each step (e.g. renormalisation); identity by default.
    fn project(&self, _x: &mut [f64]) {}
}

/// Best-so-far value after each iteration of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub initial_value: f64,
    pub best_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_value: f64,
    pub best_x: Vec<f64>,
    pub best_restart: usize,
    /// Iterations summed over restarts.
    pub iterations: usize,
    pub traces: Vec<RestartTrace>,
}

struct RestartOutcome {
    value: f64,
    x: Vec<f64>,
    iterations: usize,
    trace: RestartTrace,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-12;

fn run_restart(obj: &dyn Objective, config: &OptimizerConfig, restart: usize) -> RestartOutcome {
    let mut rng = Stream::new(config.seed).child(restart as u64).rng();
    let mut x = obj.initial_point(config.init, restart, &mut rng);
    obj.project(&mut x);
    let dim = x.len();
    let total = config.max_iterations;
    let stochastic = config.method == OptimizerMethod::Spsa;
    let eval = |x: &[f64], rng: &mut StreamRng| {
        if stochastic {
            obj.sample_value(x, rng)
        } else {
            obj.value(x)
        }
    };

    let initial_value = eval(&x, &mut rng);
    let mut best = (initial_value, x.clone());
    let mut best_values = Vec::with_capacity(total);
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut iterations = 0;

    for t in 0..total {
        iterations += 1;
        let lr = config.learning_rate.at(t, total);
        match config.method {
            OptimizerMethod::GradientDescent | OptimizerMethod::Adam => {
                let (f, g) = obj.value_and_gradient(&x);
                if f < best.0 {
                    best = (f, x.clone());
                }
                let gnorm = g.iter().map(|z| z * z).sum::<f64>().sqrt();
                if gnorm < config.convergence_tol {
                    best_values.push(best.0);
                    break;
                }
                if config.method == OptimizerMethod::GradientDescent {
                    for (xi, gi) in x.iter_mut().zip(&g) {
                        *xi -= lr * gi;
                    }
                } else {
                    let step = (t + 1) as i32;
                    let c1 = 1.0 - ADAM_BETA1.powi(step);
                    let c2 = 1.0 - ADAM_BETA2.powi(step);
                    for i in 0..dim {
                        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                        x[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                    }
                }
            }
            OptimizerMethod::Spsa => {
                let a = config.learning_rate.initial();
                let stability = 0.1 * total as f64;
                let ak = a / (t as f64 + 1.0 + stability).powf(0.602) * (1.0 + stability).powf(0.602);
                let ck = config.spsa_perturbation / (t as f64 + 1.0).powf(0.101);
                let delta: Vec<f64> =
                    (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                let plus: Vec<f64> = x.iter().zip(&delta).map(|(xi, d)| xi + ck * d).collect();
                let minus: Vec<f64> = x.iter().zip(&delta).map(|(xi, d)| xi - ck * d).collect();
                let diff = (eval(&plus, &mut rng) - eval(&minus, &mut rng)) / (2.0 * ck);
                for (xi, d) in x.iter_mut().zip(&delta) {
                    *xi -= ak * diff * d;
                }
            }
        }
        obj.project(&mut x);
        if stochastic {
            let f = eval(&x, &mut rng);
            if f < best.0 {
                best = (f, x.clone());
            }
        }
        best_values.push(best.0);
    }

    if !stochastic {
        let f = obj.value(&x);
        if f < best.0 {
            best = (f, x.clone());
            if let Some(last) = best_values.last_mut() {
                *last = f;
            }
        }
    }

    RestartOutcome {
        value: best.0,
        x: best.1,
        iterations,
        trace: RestartTrace { restart, initial_value, best_values },
    }
}

/// Multi-start minimisation; restarts run through [`par::map_indexed`] with
/// independent seeded streams, so the result does not depend on scheduling.
pub fn minimize(obj: &dyn Objective, config: &OptimizerConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let outcomes = par::map_indexed(config.execution, config.restarts, |r| run_restart(obj, config, r));
    let mut best_restart = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value < outcomes[best_restart].value {
            best_restart = i;
        }
    }
    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let best_value = outcomes[best_restart].value;
    let best_x = outcomes[best_restart].x.clone();
    Ok(OptimizationResult {
        best_value,
        best_x,
        best_restart,
        iterations,
        traces: outcomes.into_iter().map(|o| o.trace).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        center: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum()
        }
        fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
            let g = x.iter().zip(&self.center).map(|(a, b)| 2.0 * (a - b)).collect();
            (self.value(x), g)
        }
    }

    struct Noisy(Quadratic);

    impl Objective for Noisy {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.value(x)
        }
        fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
            self.0.value_and_gradient(x)
        }
        fn sample_value(&self, x: &[f64], rng: &mut StreamRng) -> f64 {
            self.0.value(x) + 0.01 * (rng.random::<f64>() - 0.5)
        }
    }

    fn quad() -> Quadratic {
        Quadratic { center: vec![0.5, -1.0, 2.0] }
    }

    #[test]
    fn every_method_finds_quadratic_minimum() {
        for method in [OptimizerMethod::GradientDescent, OptimizerMethod::Adam] {
            let cfg = OptimizerConfig { method, max_iterations: 2000, restarts: 2, ..Default::default() };
            let r = minimize(&quad(), &cfg).unwrap();
            assert!(r.best_value < 1e-8, "{method:?}: {}", r.best_value);
        }
        let cfg = OptimizerConfig {
            method: OptimizerMethod::Spsa,
            max_iterations: 2000,
            restarts: 2,
            learning_rate: LearningRate::Constant { rate: 0.1 },
            ..Default::default()
        };
        let r = minimize(&Noisy(quad()), &cfg).unwrap();
        assert!(quad().value(&r.best_x) < 1e-2, "{}", quad().value(&r.best_x));
    }

    #[test]
    fn traces_are_monotone_and_sized() {
        let cfg = OptimizerConfig { max_iterations: 50, restarts: 3, ..Default::default() };
        let r = minimize(&quad(), &cfg).unwrap();
        assert_eq!(r.traces.len(), 3);
        for t in &r.traces {
            assert!(t.best_values.len() <= 50);
            assert!(t.best_values.windows(2).all(|w| w[1] <= w[0]));
            assert!(t.best_values[0] <= t.initial_value);
        }
        assert_eq!(r.best_value, r.traces[r.best_restart].best_values.last().copied().unwrap());
    }

    #[test]
    fn serial_and_parallel_identical() {
        let base = OptimizerConfig { max_iterations: 30, restarts: 5, seed: 9, ..Default::default() };
        let a = minimize(&quad(), &OptimizerConfig { execution: Execution::Serial, ..base.clone() }).unwrap();
        let b = minimize(&quad(), &base).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_init_uses_origin_first() {
        let mut rng = Stream::new(0).rng();
        let q = quad();
        assert_eq!(q.initial_point(InitStrategy::Zeros, 0, &mut rng), vec![0.0; 3]);
        let p = q.initial_point(InitStrategy::Zeros, 1, &mut rng);
        assert!(p.iter().all(|&t| (0.0..std::f64::consts::PI).contains(&t)));
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let lr = LearningRate::Cosine { initial: 0.1, final_rate: 0.001 };
        assert!((lr.at(0, 100) - 0.1).abs() < 1e-15);
        assert!((lr.at(99, 100) - 0.001).abs() < 1e-15);
        assert!(lr.at(50, 100) < 0.1 && lr.at(50, 100) > 0.001);
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let cfg = OptimizerConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<OptimizerConfig>(&text).unwrap(), cfg);
        let partial: OptimizerConfig = serde_json::from_str(r#"{"restarts": 3}"#).unwrap();
        assert_eq!(partial.restarts, 3);
        assert!(OptimizerConfig { restarts: 0, ..Default::default() }.validate().is_err());
        let bad =
            OptimizerConfig { learning_rate: LearningRate::Constant { rate: -1.0 }, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
