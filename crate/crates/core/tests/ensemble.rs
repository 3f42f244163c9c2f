use ippt::detection::{Criterion, OptimizerConfig};
use ippt::harness::{ensemble_study, EnsembleStudyConfig};
use ippt::par::Execution;

fn small(k_values: Vec<usize>, samples: usize, depths: Vec<usize>) -> EnsembleStudyConfig {
    EnsembleStudyConfig {
        n_qubits: 2,
        bipartition: None,
        k_values,
        samples_per_k: samples,
        depths,
        optimizer: OptimizerConfig { max_iterations: 80, restarts: 3, ..Default::default() },
        seed: 11,
        ..Default::default()
    }
}

#[test]
fn pure_samples_are_all_npt() {
    let table = ensemble_study(&small(vec![1], 200, vec![1])).unwrap();
    assert_eq!(table.rate(1, Criterion::ExactPpt, None), Some(1.0));
}

#[test]
fn exact_rate_falls_with_environment() {
    let table = ensemble_study(&small(vec![1, 2, 4, 8, 16], 200, vec![1])).unwrap();
    let rates: Vec<f64> =
        [1, 2, 4, 8, 16].iter().map(|&k| table.rate(k, Criterion::ExactPpt, None).unwrap()).collect();
    // two-point slack absorbs sampling noise between neighbouring k
    assert!(rates.windows(2).all(|w| w[1] <= w[0] + 0.02), "{rates:?}");
    assert!(rates[4] < rates[0]);
}

#[test]
fn depth_and_exact_bounds() {
    let table = ensemble_study(&small(vec![2, 4], 100, vec![1, 2, 3])).unwrap();
    for k in [2, 4] {
        let exact = table.rate(k, Criterion::ExactPpt, None).unwrap();
        let by_depth: Vec<f64> = (1..=3).map(|d| table.rate(k, Criterion::Ippt, Some(d)).unwrap()).collect();
        assert!(by_depth.iter().all(|&r| r <= exact), "k={k}: {by_depth:?} vs {exact}");
        assert!(by_depth.windows(2).all(|w| w[1] >= w[0] - 0.02), "k={k}: {by_depth:?}");
    }
}

#[test]
fn serial_and_parallel_tables_match() {
    let par = small(vec![2, 8], 24, vec![1]);
    let ser = EnsembleStudyConfig { execution: Execution::Serial, ..par.clone() };
    assert_eq!(ensemble_study(&par).unwrap().to_csv(), ensemble_study(&ser).unwrap().to_csv());
}
