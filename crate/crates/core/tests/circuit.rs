use std::collections::HashMap;

use proptest::prelude::*;
use quboflow::optimizers::{central_gradient, ObjectiveError};
use quboflow::problems::{knapsack, KnapsackInstance, Problem};
use quboflow::qubo::{to_qubo, HyperArgs};
use quboflow::simulator::{precompute_energies, QaoaCircuit, DEFAULT_QUBIT_CAP};
use quboflow::solvers::{
    solve_annealing, solve_brute_force, solve_vqa, vqa_loss, AnnealingSettings, PqcKind, VqaSettings,
};
use quboflow::{Angles, Polynomial, Qubo, StateVector};

fn random_qubo() -> impl Strategy<Value = Qubo> {
    (1usize..=6, prop::collection::vec((0usize..6, 0usize..6, -4.0f64..4.0), 1..15)).prop_map(|(n, raw)| {
        let vars: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        let poly = Polynomial::from_terms(raw.iter().map(|&(i, j, c)| {
            let mut m = vec![vars[i % n].clone()];
            if i % n != j % n {
                m.push(vars[j % n].clone());
            }
            (m, c)
        }))
        .unwrap();
        Qubo::new(poly, 0.0, vars).unwrap()
    })
}

fn angles(layers: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.2f64..3.2, 2 * layers)
}

fn knapsack_problem() -> Problem {
    knapsack(&KnapsackInstance {
        max_weight: 2,
        weights: vec![1, 1, 1],
        values: vec![2.0, 2.0, 1.0],
    })
    .unwrap()
}

fn knapsack_args() -> HyperArgs {
    HyperArgs::new(vec![1.0, 2.5, 2.5]).unwrap()
}

proptest! {
    #[test]
    fn layers_preserve_norm_and_phase_preserves_probabilities(q in random_qubo(), flat in angles(3)) {
        let energies = precompute_energies(&q, DEFAULT_QUBIT_CAP).unwrap();
        let a = Angles::from_flat(&flat).unwrap();
        let mut state = StateVector::uniform(q.var_order().to_vec());
        for (g, b) in a.gammas.iter().zip(&a.betas) {
            let before = state.probabilities();
            state.apply_phase(&energies, *g);
            let after = state.probabilities();
            for (x, y) in before.iter().zip(&after) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            state.apply_mixer(*b);
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_difference_gradient_is_step_stable(q in random_qubo(), flat in angles(2)) {
        let circuit = QaoaCircuit::new(&q, DEFAULT_QUBIT_CAP).unwrap();
        let f = |x: &[f64]| -> Result<f64, ObjectiveError> { Ok(circuit.expectation(&Angles::from_flat(x).unwrap())) };
        let coarse = central_gradient(&f, &flat, 1e-4).unwrap();
        let fine = central_gradient(&f, &flat, 1e-5).unwrap();
        for (c, d) in coarse.iter().zip(&fine) {
            prop_assert!((c - d).abs() <= 1e-3 * c.abs().max(d.abs()).max(1.0), "{} vs {}", c, d);
        }
    }

    #[test]
    fn brute_force_minimum_matches_direct_evaluation(q in random_qubo()) {
        let n = q.num_vars();
        let direct = (0..1usize << n)
            .map(|k| {
                let env: HashMap<String, f64> = q
                    .var_order()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.clone(), (k >> i & 1) as f64))
                    .collect();
                q.poly().evaluate(&env).unwrap() + q.offset()
            })
            .fold(f64::INFINITY, f64::min);
        // wrap the QUBO as an unconstrained problem
        let p = Problem::new("q", q.poly().clone(), vec![], q.var_order().to_vec()).unwrap();
        let r = solve_brute_force(&p, &HyperArgs::new(vec![1.0]).unwrap(), DEFAULT_QUBIT_CAP).unwrap();
        prop_assert!((r.history[0][0] - direct).abs() < 1e-9);
        prop_assert!((r.total_probability() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn every_solver_returns_a_distribution() {
    let p = knapsack_problem();
    let a = knapsack_args();
    let mut vqa = VqaSettings::new(PqcKind::Qaoa, Angles::from_rows(&[vec![0.5; 2], vec![1.0; 2]]).unwrap());
    vqa.optimizer.steps = 3;
    let mut wf = vqa.clone();
    wf.pqc = PqcKind::WfQaoa;
    let annealing = AnnealingSettings {
        num_reads: 50,
        seed: Some(1),
        ..AnnealingSettings::default()
    };
    for r in [
        solve_vqa(&p, &vqa, &a).unwrap(),
        solve_vqa(&p, &wf, &a).unwrap(),
        solve_annealing(&p, &annealing, &a).unwrap(),
        solve_brute_force(&p, &a, DEFAULT_QUBIT_CAP).unwrap(),
    ] {
        assert!((r.total_probability() - 1.0).abs() < 1e-6);
        assert_eq!(r.var_order, ["x0", "x1", "x2", "y1", "y2"]);
    }
}

#[test]
fn knapsack_qaoa_run_does_not_increase_loss() {
    let p = knapsack_problem();
    let a = knapsack_args();
    let settings = VqaSettings::new(PqcKind::Qaoa, Angles::from_rows(&[vec![0.5; 5], vec![1.0; 5]]).unwrap());
    let q = to_qubo(&p, &a).unwrap();
    let circuit = QaoaCircuit::new(&q, DEFAULT_QUBIT_CAP).unwrap();
    let initial = vqa_loss(&p, &circuit, &settings, &settings.angles.to_flat()).unwrap();
    let r = solve_vqa(&p, &settings, &a).unwrap();
    let last = *r.history[0].last().unwrap();
    assert_eq!(r.history[0].len(), settings.optimizer.steps);
    assert!(last <= initial + 1e-9, "{last} > {initial}");
}

#[test]
fn cold_annealing_finds_two_variable_ground_state() {
    // E = a + b - 3ab: ground state (1, 1) at -1, every other state >= 0
    let poly = Polynomial::from_terms([(vec!["a"], 1.0), (vec!["b"], 1.0), (vec!["a", "b"], -3.0)]).unwrap();
    let p = Problem::new("pair", poly, vec![], vec!["a".into(), "b".into()]).unwrap();
    let settings = AnnealingSettings {
        num_reads: 1000,
        t_final: 1e-3,
        seed: Some(11),
        ..AnnealingSettings::default()
    };
    let r = solve_annealing(&p, &settings, &HyperArgs::new(vec![1.0]).unwrap()).unwrap();
    assert!(r.probability_of(&[1, 1]) >= 0.95, "{}", r.probability_of(&[1, 1]));
}
