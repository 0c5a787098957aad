//! Solver orchestration.
//!
//! Every solver turns a [`Problem`] and penalty weights into a QUBO and
//! returns a [`SolverResults`] table of assignment probabilities:
//!
//! * [`solve_vqa`]: QAOA circuit simulation with Adam-optimized angles. The
//!   plain variant minimizes the expected QUBO energy; the weight-free variant
//!   minimizes the probability-weighted score of the most likely outcomes.
//! * [`solve_annealing`]: independent Metropolis anneals on the Ising form.
//! * [`solve_brute_force`]: exhaustive enumeration, reporting every minimizer.
//!
//! [`hyper_optimize`] wraps any of them in a global search over the weights.

use std::collections::BTreeMap;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::optimizers::{Adam, Bounds, CrossEntropy, GridSearch, ObjectiveError, OptimizeError, RandomSearch, SearchOutcome};
use crate::problems::Problem;
use crate::qubo::{bits_from_spins, qubo_to_ising, to_qubo, ConvertError, HyperArgs};
use crate::results::{weighted_avg_evaluation, Params, Record, ResultsError, SolverResults};
use crate::simulator::{bits_to_index, index_to_bits, precompute_energies, QaoaCircuit, SimulatorError, DEFAULT_QUBIT_CAP};
use crate::{Angles, Ising};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Results(#[from] ResultsError),
    #[error("invalid solver settings: {0}")]
    Settings(String),
    #[error("inner solve failed at hyper_args {alphas:?}: {source}")]
    AtHyperArgs {
        alphas: Vec<f64>,
        #[source]
        source: Box<SolveError>,
    },
}

/// How solver output is scored: `score(bits, penalty)` of the
/// `limit_results` most probable records, optionally renormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationSettings {
    pub penalty: f64,
    pub limit_results: usize,
    pub normalize: bool,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            penalty: 0.0,
            limit_results: 10,
            normalize: true,
        }
    }
}

impl EvaluationSettings {
    pub fn evaluate(&self, problem: &Problem, records: &[Record]) -> Result<f64, ResultsError> {
        weighted_avg_evaluation(
            records,
            |bits, penalty| problem.score(bits, penalty),
            self.penalty,
            self.limit_results,
            self.normalize,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqcKind {
    Qaoa,
    /// Weight-free QAOA: trained on the score-based evaluation instead of the energy.
    WfQaoa,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqaSettings {
    pub pqc: PqcKind,
    pub angles: Angles,
    pub optimizer: Adam,
    pub evaluation: EvaluationSettings,
    pub qubit_cap: usize,
}

impl VqaSettings {
    pub fn new(pqc: PqcKind, angles: Angles) -> Self {
        Self {
            pqc,
            angles,
            optimizer: Adam::default(),
            evaluation: EvaluationSettings::default(),
            qubit_cap: DEFAULT_QUBIT_CAP,
        }
    }
}

fn state_records(state: &crate::StateVector) -> Vec<Record> {
    state
        .probability_table()
        .into_iter()
        .map(|(bits, p)| Record::new(bits, p))
        .collect()
}

/// Training loss of a VQA at the given flat angle vector.
pub fn vqa_loss(
    problem: &Problem,
    circuit: &QaoaCircuit<f64>,
    settings: &VqaSettings,
    flat_angles: &[f64],
) -> Result<f64, SolveError> {
    let angles = Angles::from_flat(flat_angles)?;
    Ok(match settings.pqc {
        PqcKind::Qaoa => circuit.expectation(&angles),
        PqcKind::WfQaoa => {
            let state = circuit.run(&angles);
            settings.evaluation.evaluate(problem, &state_records(&state))?
        }
    })
}

pub fn solve_vqa(problem: &Problem, settings: &VqaSettings, hyper_args: &HyperArgs) -> Result<SolverResults, SolveError> {
    if settings.angles.layers() == 0 {
        return Err(SolveError::Settings("a VQA needs at least one layer".into()));
    }
    let qubo = to_qubo(problem, hyper_args)?;
    let circuit = QaoaCircuit::new(&qubo, settings.qubit_cap)?;
    let loss = |x: &[f64]| -> Result<f64, ObjectiveError> {
        vqa_loss(problem, &circuit, settings, x).map_err(Into::into)
    };
    let outcome = settings.optimizer.minimize(loss, &settings.angles.to_flat())?;
    let angles = Angles::from_flat(&outcome.x)?;
    debug!(
        "vqa finished after {} steps, final loss {:?}",
        outcome.history.len(),
        outcome.history.last()
    );
    let state = circuit.run(&angles);
    Ok(SolverResults {
        var_order: qubo.var_order().to_vec(),
        records: state_records(&state),
        history: vec![outcome.history],
        params: Params {
            angles: Some(angles.to_rows()),
            hyper_args: hyper_args.as_slice().to_vec(),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealingSettings {
    pub num_reads: usize,
    pub num_sweeps: usize,
    pub t_initial: f64,
    pub t_final: f64,
    pub seed: Option<u64>,
}

impl Default for AnnealingSettings {
    fn default() -> Self {
        Self {
            num_reads: 100,
            num_sweeps: 1000,
            t_initial: 10.0,
            t_final: 0.05,
            seed: None,
        }
    }
}

/// Geometric temperature ladder from `t_initial` down to `t_final`.
pub fn geometric_schedule(t_initial: f64, t_final: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![t_final],
        _ => {
            let ratio = (t_final / t_initial).ln() / (steps - 1) as f64;
            (0..steps).map(|k| t_initial * (ratio * k as f64).exp()).collect()
        }
    }
}

/// SplitMix64 finalizer; derives independent per-task seeds from a base seed.
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One single-spin-flip Metropolis anneal; returns the final spins.
fn anneal_once(ising: &Ising, neighbours: &[Vec<(usize, f64)>], schedule: &[f64], seed: u64) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ising.h.len();
    let mut spins: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    for &t in schedule {
        for i in 0..n {
            let field = ising.h[i]
                + neighbours[i]
                    .iter()
                    .map(|&(j, jij)| jij * f64::from(spins[j]))
                    .sum::<f64>();
            let delta = -2.0 * f64::from(spins[i]) * field;
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / t).exp() {
                spins[i] = -spins[i];
            }
        }
    }
    spins
}

pub fn solve_annealing(
    problem: &Problem,
    settings: &AnnealingSettings,
    hyper_args: &HyperArgs,
) -> Result<SolverResults, SolveError> {
    if settings.num_reads == 0 {
        return Err(SolveError::Settings("num_reads must be at least 1".into()));
    }
    if settings.num_sweeps == 0 {
        return Err(SolveError::Settings("num_sweeps must be at least 1".into()));
    }
    if !(settings.t_initial > 0.0 && settings.t_final > 0.0) {
        return Err(SolveError::Settings("annealing temperatures must be positive".into()));
    }
    let qubo = to_qubo(problem, hyper_args)?;
    let ising = qubo_to_ising(&qubo);
    let neighbours = ising.neighbours();
    let schedule = geometric_schedule(settings.t_initial, settings.t_final, settings.num_sweeps);
    let base = settings.seed.unwrap_or_else(rand::random);

    let finals: Vec<Vec<u8>> = (0..settings.num_reads)
        .into_par_iter()
        .map(|r| bits_from_spins(&anneal_once(&ising, &neighbours, &schedule, mix_seed(base, r as u64))))
        .collect();
    let energies: Vec<f64> = finals.iter().map(|b| qubo.energy(b)).collect();

    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for bits in &finals {
        *counts.entry(bits_to_index(bits)).or_default() += 1;
    }
    let n = qubo.num_vars();
    let records = counts
        .into_iter()
        .map(|(k, c)| Record::new(index_to_bits(k, n), c as f64 / settings.num_reads as f64))
        .collect();
    Ok(SolverResults {
        var_order: qubo.var_order().to_vec(),
        records,
        history: vec![energies],
        params: Params {
            angles: None,
            hyper_args: hyper_args.as_slice().to_vec(),
        },
    })
}

/// Exhaustive minimization; every minimizer gets an equal share of probability.
pub fn solve_brute_force(problem: &Problem, hyper_args: &HyperArgs, qubit_cap: usize) -> Result<SolverResults, SolveError> {
    let qubo = to_qubo(problem, hyper_args)?;
    let energies = precompute_energies(&qubo, qubit_cap)?;
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * min.abs().max(1.0);
    let argmin: Vec<usize> = (0..energies.len()).filter(|&k| energies[k] - min <= tol).collect();
    let share = 1.0 / argmin.len() as f64;
    let n = qubo.num_vars();
    Ok(SolverResults {
        var_order: qubo.var_order().to_vec(),
        records: argmin.into_iter().map(|k| Record::new(index_to_bits(k, n), share)).collect(),
        history: vec![vec![min]],
        params: Params {
            angles: None,
            hyper_args: hyper_args.as_slice().to_vec(),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverKind {
    Vqa(VqaSettings),
    Annealing(AnnealingSettings),
    BruteForce { qubit_cap: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum HyperSearch {
    Grid(GridSearch),
    Random(RandomSearch),
    Cem(CrossEntropy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperOptimizer {
    pub search: HyperSearch,
    pub bounds: Bounds,
    pub evaluation: EvaluationSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperOutcome {
    pub best: HyperArgs,
    pub best_score: f64,
    /// Every evaluated `(hyper_args, score)` pair, in evaluation order.
    pub ledger: Vec<(Vec<f64>, f64)>,
    pub search: SearchOutcome,
}

/// Global search over penalty weights. Each candidate runs `inner` and is
/// scored by the probability-weighted evaluation of its results.
pub fn hyper_optimize<F>(problem: &Problem, optimizer: &HyperOptimizer, inner: F) -> Result<HyperOutcome, SolveError>
where
    F: Fn(&HyperArgs) -> Result<SolverResults, SolveError> + Sync,
{
    let expected = problem.group_count() + 1;
    if optimizer.bounds.dim() != expected {
        return Err(SolveError::Settings(format!(
            "hyper_optimizer bounds have {} dimensions, problem needs {expected}",
            optimizer.bounds.dim()
        )));
    }
    let objective = |alphas: &[f64]| -> Result<f64, ObjectiveError> {
        let args = HyperArgs::new(alphas.to_vec()).map_err(SolveError::from)?;
        let results = inner(&args)?;
        Ok(optimizer.evaluation.evaluate(problem, &results.records).map_err(SolveError::from)?)
    };
    let mut ledger = Vec::new();
    let observe = |x: &[f64], v: f64| ledger.push((x.to_vec(), v));
    let outcome = match &optimizer.search {
        HyperSearch::Grid(g) => g.minimize_observed(objective, &optimizer.bounds, observe),
        HyperSearch::Random(r) => r.minimize_observed(objective, &optimizer.bounds, observe),
        HyperSearch::Cem(c) => c.minimize_observed(objective, &optimizer.bounds, observe),
    }
    .map_err(|e| match e {
        OptimizeError::Objective { point, source } => SolveError::AtHyperArgs {
            alphas: point,
            source: source
                .downcast::<SolveError>()
                .unwrap_or_else(|other| Box::new(SolveError::Settings(other.to_string()))),
        },
        other => SolveError::Optimize(other),
    })?;
    Ok(HyperOutcome {
        best: HyperArgs::new(outcome.best.clone())?,
        best_score: outcome.best_value,
        ledger,
        search: outcome,
    })
}

/// A fully configured experiment: problem, solver and optional hyperoptimizer.
#[derive(Debug, Clone)]
pub struct Solver {
    pub problem: Problem,
    pub kind: SolverKind,
    pub hyper_args: HyperArgs,
    pub hyper_optimizer: Option<HyperOptimizer>,
    pub seed: Option<u64>,
}

impl Solver {
    /// Runs the inner solver once at `hyper_args`. Stochastic solvers draw
    /// their seed from the base seed and the weights, so repeated calls with
    /// the same weights agree.
    pub fn solve_at(&self, hyper_args: &HyperArgs) -> Result<SolverResults, SolveError> {
        match &self.kind {
            SolverKind::Vqa(s) => solve_vqa(&self.problem, s, hyper_args),
            SolverKind::Annealing(s) => {
                let mut s = s.clone();
                let base = s.seed.or(self.seed);
                s.seed = base.map(|b| {
                    hyper_args
                        .as_slice()
                        .iter()
                        .fold(b, |acc, a| mix_seed(acc, a.to_bits()))
                });
                solve_annealing(&self.problem, &s, hyper_args)
            }
            SolverKind::BruteForce { qubit_cap } => solve_brute_force(&self.problem, hyper_args, *qubit_cap),
        }
    }

    pub fn hyper_optimize(&self) -> Result<Option<HyperOutcome>, SolveError> {
        self.hyper_optimizer
            .as_ref()
            .map(|h| hyper_optimize(&self.problem, h, |a| self.solve_at(a)))
            .transpose()
    }

    /// Runs the experiment. With a hyperoptimizer, the first history stage is
    /// the score of every evaluated weight vector and the final results come
    /// from a solve at the best weights.
    pub fn solve(&self) -> Result<SolverResults, SolveError> {
        match self.hyper_optimize()? {
            None => self.solve_at(&self.hyper_args),
            Some(outcome) => {
                let mut results = self.solve_at(&outcome.best)?;
                let scores = outcome.ledger.iter().map(|(_, s)| *s).collect();
                results.history.insert(0, scores);
                Ok(results)
            }
        }
    }
}
