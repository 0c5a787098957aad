//! Solver output and post-processing: ranking, score evaluation and the
//! probability-weighted average used as a hyperparameter objective.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResultsError {
    #[error("no result records to evaluate")]
    EmptyResults,
    #[error("limit_results must be at least 1")]
    InvalidLimit,
}

/// One assignment (bits in the solver's variable order) and its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub bits: Vec<u8>,
    pub probability: f64,
}

impl Record {
    pub fn new(bits: Vec<u8>, probability: f64) -> Self {
        Self { bits, probability }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedRecord {
    pub bits: Vec<u8>,
    pub probability: f64,
    pub evaluation: f64,
}

/// Final parameters of a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<Vec<f64>>>,
    pub hyper_args: Vec<f64>,
}

/// Uniform output of every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResults {
    pub var_order: Vec<String>,
    pub records: Vec<Record>,
    /// One entry per optimization stage, each a per-step value trace.
    pub history: Vec<Vec<f64>>,
    pub params: Params,
}

impl SolverResults {
    pub fn total_probability(&self) -> f64 {
        self.records.iter().map(|r| r.probability).sum()
    }

    /// Highest-probability record, ties broken as in [`sort_solver_results`].
    pub fn most_probable(&self) -> Option<&Record> {
        self.records.iter().min_by(|a, b| rank(a, b))
    }

    pub fn probability_of(&self, bits: &[u8]) -> f64 {
        self.records
            .iter()
            .filter(|r| r.bits == bits)
            .map(|r| r.probability)
            .sum()
    }
}

/// Probabilities closer than this rank as ties, so that states related by a
/// symmetry of the problem keep a stable order despite rounding noise.
pub const TIE_RESOLUTION: f64 = 1e-12;

fn tie_bucket(p: f64) -> i64 {
    (p / TIE_RESOLUTION).round() as i64
}

/// Ranking order: higher probability first; equal probabilities order
/// assignments in descending lexicographic order.
fn rank(a: &Record, b: &Record) -> Ordering {
    tie_bucket(b.probability)
        .cmp(&tie_bucket(a.probability))
        .then_with(|| b.bits.cmp(&a.bits))
}

/// The `limit_results` most probable records, best first.
pub fn sort_solver_results(records: &[Record], limit_results: usize) -> Result<Vec<Record>, ResultsError> {
    if limit_results == 0 {
        return Err(ResultsError::InvalidLimit);
    }
    if records.is_empty() {
        return Err(ResultsError::EmptyResults);
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(rank);
    sorted.truncate(limit_results);
    Ok(sorted)
}

/// Probability-weighted score of the `limit_results` most probable records.
/// With `normalize`, the kept probabilities are rescaled to sum to one.
pub fn weighted_avg_evaluation<F>(
    records: &[Record],
    score: F,
    penalty: f64,
    limit_results: usize,
    normalize: bool,
) -> Result<f64, ResultsError>
where
    F: Fn(&[u8], f64) -> f64,
{
    let top = sort_solver_results(records, limit_results)?;
    let mass: f64 = top.iter().map(|r| r.probability).sum();
    let scale = if normalize && mass > 0.0 { mass.recip() } else { 1.0 };
    Ok(top
        .iter()
        .map(|r| r.probability * scale * score(&r.bits, penalty))
        .sum())
}

/// Appends the score of each record, preserving order.
pub fn add_evaluation_to_results<F>(records: &[Record], score: F, penalty: f64) -> Vec<EvaluatedRecord>
where
    F: Fn(&[u8], f64) -> f64,
{
    records
        .iter()
        .map(|r| EvaluatedRecord {
            bits: r.bits.clone(),
            probability: r.probability,
            evaluation: score(&r.bits, penalty),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{knapsack, KnapsackInstance};

    fn score_fn() -> impl Fn(&[u8], f64) -> f64 {
        let p = knapsack(&KnapsackInstance {
            max_weight: 2,
            weights: vec![1, 1, 1],
            values: vec![2.0, 2.0, 1.0],
        })
        .unwrap();
        move |bits, penalty| p.score(bits, penalty)
    }

    fn rec(bits: [u8; 5], p: f64) -> Record {
        Record::new(bits.to_vec(), p)
    }

    #[test]
    fn weighted_average_of_two() {
        let records = [rec([1, 1, 0, 0, 1], 0.5), rec([1, 1, 1, 1, 0], 0.5)];
        let v = weighted_avg_evaluation(&records, score_fn(), 0.0, 2, true).unwrap();
        assert_eq!(v, -2.0);
    }

    #[test]
    fn weighted_average_single_and_limited() {
        let s = score_fn();
        let one = [rec([1, 0, 1, 0, 1], 0.3)];
        assert_eq!(weighted_avg_evaluation(&one, &s, 0.0, 10, true).unwrap(), -3.0);
        let records = [rec([1, 1, 0, 0, 1], 0.9), rec([0, 0, 0, 0, 0], 0.1)];
        assert_eq!(weighted_avg_evaluation(&records, &s, 0.0, 1, true).unwrap(), -4.0);
        let unnormalized = weighted_avg_evaluation(&records, &s, 0.0, 1, false).unwrap();
        assert!((unnormalized + 3.6).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(
            weighted_avg_evaluation(&[], score_fn(), 0.0, 1, true),
            Err(ResultsError::EmptyResults)
        );
        assert_eq!(sort_solver_results(&[], 3), Err(ResultsError::EmptyResults));
        assert_eq!(
            sort_solver_results(&[rec([0; 5], 1.0)], 0),
            Err(ResultsError::InvalidLimit)
        );
        assert!(add_evaluation_to_results(&[], score_fn(), 0.0).is_empty());
    }

    #[test]
    fn sort_truncates_and_orders() {
        let records = [rec([0, 0, 0, 0, 1], 0.1), rec([1, 0, 0, 0, 0], 0.6), rec([0, 1, 0, 0, 0], 0.3)];
        let s = sort_solver_results(&records, 10).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].bits, vec![1, 0, 0, 0, 0]);
        assert_eq!(s[2].bits, vec![0, 0, 0, 0, 1]);
        let s = sort_solver_results(&records, 1).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn ties_rank_larger_assignment_first() {
        let records = [rec([0, 1, 1, 0, 1], 0.2), rec([1, 0, 1, 0, 1], 0.2)];
        let s = sort_solver_results(&records, 2).unwrap();
        assert_eq!(s[0].bits, vec![1, 0, 1, 0, 1]);
    }

    #[test]
    fn rounding_noise_is_a_tie() {
        let records = [rec([0, 1, 0, 1, 0], 0.07105702448068256), rec([1, 0, 0, 1, 0], 0.07105702448068253)];
        let s = sort_solver_results(&records, 2).unwrap();
        assert_eq!(s[0].bits, vec![1, 0, 0, 1, 0]);
    }

    #[test]
    fn evaluations_preserve_order() {
        let records = [rec([1, 0, 1, 1, 0], 0.06831021), rec([1, 1, 0, 0, 1], 0.14605589)];
        let ev = add_evaluation_to_results(&records, score_fn(), 0.0);
        assert_eq!(ev[0].evaluation, 0.0);
        assert_eq!(ev[1].evaluation, -4.0);
        assert_eq!(ev[1].probability, 0.14605589);
    }
}
