use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use quboflow::optimizers::{central_gradient, Bounds, CrossEntropy, GridSearch, ObjectiveError, RandomSearch};

/// One axis as (low, step, whole steps, extra half step).
fn axis() -> impl Strategy<Value = (f64, f64, u32, bool)> {
    (
        -20i32..20,
        prop::sample::select(vec![0.1, 0.2, 0.25, 0.3, 0.5, 1.0, 2.0]),
        1u32..12,
        any::<bool>(),
    )
        .prop_map(|(lo, step, n, half)| (f64::from(lo) / 4.0, step, n, half))
}

fn quadratic(x: &[f64]) -> Result<f64, ObjectiveError> {
    Ok(x.iter().map(|v| (v - 3.0).powi(2)).sum())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn grid_evaluates_every_half_open_point(axes in prop::collection::vec(axis(), 1..=3)) {
        // [low, low + n*step) holds n points; half a step more adds one
        let expected: usize = axes.iter().map(|&(_, _, n, half)| n as usize + usize::from(half)).product();
        let bounds = Bounds::new(
            axes.iter()
                .map(|&(lo, step, n, half)| (lo, lo + step * (f64::from(n) + if half { 0.5 } else { 0.0 })))
                .collect(),
        )
        .unwrap();
        let grid = GridSearch::new(axes.iter().map(|a| a.1).collect());
        let calls = AtomicUsize::new(0);
        let out = grid
            .minimize(
                |x: &[f64]| {
                    calls.fetch_add(1, Ordering::Relaxed);
                    quadratic(x)
                },
                &bounds,
            )
            .unwrap();
        prop_assert_eq!(calls.load(Ordering::Relaxed), expected);
        prop_assert_eq!(out.evaluations, expected);
        prop_assert_eq!(grid.point_count(&bounds).unwrap(), expected as u128);
    }
}

proptest! {
    #[test]
    fn finite_differences_match_analytic_gradient(
        c in prop::collection::vec(-3.0f64..3.0, 3),
        d in -3.0f64..3.0,
        x in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        // f = sum c_i x_i^3 + d x0 x1
        let f = |p: &[f64]| -> Result<f64, ObjectiveError> {
            Ok(c.iter().zip(p).map(|(ci, xi)| ci * xi.powi(3)).sum::<f64>() + d * p[0] * p[1])
        };
        let analytic = [
            3.0 * c[0] * x[0] * x[0] + d * x[1],
            3.0 * c[1] * x[1] * x[1] + d * x[0],
            3.0 * c[2] * x[2] * x[2],
        ];
        for h in [1e-3, 1e-4, 1e-5] {
            let g = central_gradient(&f, &x, h).unwrap();
            for (gi, ai) in g.iter().zip(&analytic) {
                prop_assert!((gi - ai).abs() <= 1e-4 * ai.abs().max(1.0), "h={}: {} vs {}", h, gi, ai);
            }
        }
    }

    #[test]
    fn cem_is_identical_across_worker_counts(seed in any::<u64>()) {
        let bounds = Bounds::new(vec![(0.0, 10.0); 3]).unwrap();
        let run = |processes| {
            CrossEntropy { epochs: 3, samples_per_epoch: 40, processes, seed: Some(seed), ..CrossEntropy::default() }
                .minimize(quadratic, &bounds)
                .unwrap()
        };
        let one = run(1);
        for p in [2, 4] {
            let other = run(p);
            prop_assert_eq!(&one.best, &other.best);
            prop_assert_eq!(&one.history, &other.history);
            prop_assert_eq!(one.best_value.to_bits(), other.best_value.to_bits());
        }
    }

    #[test]
    fn global_searches_stay_in_bounds(
        raw in prop::collection::vec((-5.0f64..5.0, 0.1f64..4.0), 1..=3),
        seed in any::<u64>(),
    ) {
        let bounds = Bounds::new(raw.iter().map(|&(lo, w)| (lo, lo + w)).collect()).unwrap();
        // rewards escaping the box, so any unclipped point would win
        let outward = |x: &[f64]| -> Result<f64, ObjectiveError> { Ok(-x.iter().map(|v| v * v).sum::<f64>()) };
        let grid = GridSearch::new(vec![0.3; raw.len()]).minimize(outward, &bounds).unwrap();
        let random = RandomSearch::new(50, Some(seed)).minimize(outward, &bounds).unwrap();
        let cem = CrossEntropy { epochs: 4, samples_per_epoch: 30, seed: Some(seed), ..CrossEntropy::default() }
            .minimize(outward, &bounds)
            .unwrap();
        for best in [grid.best, random.best, cem.best] {
            prop_assert!(bounds.contains(&best), "{:?}", best);
        }
    }
}
