use proptest::prelude::*;
use quboflow::config::{solver_from_config, ExperimentConfig};
use quboflow::problems::{knapsack, KnapsackInstance};
use quboflow::results::{sort_solver_results, weighted_avg_evaluation, Record};

const PROBLEM: &str = "problem:
  type: knapsack
  max_weight: 2
  items_weights: [1, 1, 1]
  items_values: [2, 2, 1]
";

const SOLVERS: [&str; 3] = [
    "solver:
  type: vqa
  pqc:
    type: qaoa
    layers: 5
  optimizer:
    type: qml
  params_inits:
    angles: [[0.5, 0.5, 0.5, 0.5, 0.5], [1, 1, 1, 1, 1]]
    hyper_args: [1, 2.5, 2.5]
",
    "solver:
  type: advantage
  num_reads: 100
  hyper_optimizer:
    type: grid
    steps: [0.1, 0.1, 0.1]
    bounds: [[1, 10], [1, 10], [1, 10]]
",
    "solver:
  type: vqa
  pqc:
    type: wfqaoa
    layers: 5
    backend: default.qubit
  optimizer:
    type: qml
    optimizer: adam
    steps: 50
    stepsize: 0.01
  hyper_optimizer:
    type: cem
    processes: 4
    samples_per_epoch: 200
    epochs: 10
    bounds: [[1, 10], [1, 10], [1, 10]]
  params_inits:
    angles: [[0.5, 0.5, 0.5, 0.5, 0.5], [1, 1, 1, 1, 1]]
    hyper_args: [1, 2.5, 2.5]
",
];

fn bits_of(k: usize) -> Vec<u8> {
    (0..5).map(|i| (k >> i & 1) as u8).collect()
}

#[test]
fn example_documents_round_trip() {
    for solver in SOLVERS {
        let cfg = ExperimentConfig::parse(&format!("{PROBLEM}{solver}")).unwrap();
        solver_from_config(&cfg).unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_yaml()).unwrap(), cfg);
        assert_eq!(ExperimentConfig::parse(&cfg.to_json()).unwrap(), cfg);
    }
    let problem_only = ExperimentConfig::parse(&format!("{PROBLEM}solver:\n  type: brute_force\n")).unwrap();
    assert_eq!(ExperimentConfig::parse(&problem_only.to_yaml()).unwrap(), problem_only);
}

proptest! {
    #[test]
    fn uniform_weighted_average_is_the_mean(subset in prop::collection::btree_set(0usize..32, 1..=32), penalty in -3.0f64..3.0) {
        let p = knapsack(&KnapsackInstance { max_weight: 2, weights: vec![1, 1, 1], values: vec![2.0, 2.0, 1.0] }).unwrap();
        let share = 1.0 / subset.len() as f64;
        let records: Vec<Record> = subset.iter().map(|&k| Record::new(bits_of(k), share)).collect();
        let mean = subset.iter().map(|&k| p.score(&bits_of(k), penalty)).sum::<f64>() / subset.len() as f64;
        let avg = weighted_avg_evaluation(&records, |b, pen| p.score(b, pen), penalty, records.len(), true).unwrap();
        prop_assert!((avg - mean).abs() < 1e-9, "{} vs {}", avg, mean);
    }

    #[test]
    fn sorting_permutes_then_truncates(
        raw in prop::collection::vec((0usize..32, prop::sample::select(vec![0.0, 0.1, 0.25, 0.5, 0.125])), 1..20),
        limit in 1usize..25,
    ) {
        let records: Vec<Record> = raw.iter().map(|&(k, p)| Record::new(bits_of(k), p)).collect();
        let key = |r: &Record| (r.bits.clone(), r.probability.to_bits());
        let mut before: Vec<_> = records.iter().map(key).collect();
        let mut after: Vec<_> = sort_solver_results(&records, records.len()).unwrap().iter().map(key).collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);

        let top = sort_solver_results(&records, limit).unwrap();
        prop_assert_eq!(top.len(), limit.min(records.len()));
        prop_assert!(top.windows(2).all(|w| w[0].probability >= w[1].probability));
    }
}
