//! Local (Adam) and global (grid, random, cross-entropy) minimizers over
//! real vectors.
//!
//! Global searches evaluate candidates in batches, optionally on a worker
//! pool of `processes` threads. Candidates are always generated on the
//! calling thread from a single seeded stream and results are folded in
//! candidate order, so outcomes do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rayon::ThreadPool;
use thiserror::Error;

pub type ObjectiveError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("objective returned a non-finite value at {point:?}")]
    NonFiniteObjective { point: Vec<f64> },
    #[error("objective failed at {point:?}: {source}")]
    Objective {
        point: Vec<f64>,
        #[source]
        source: ObjectiveError,
    },
    #[error("grid has {count} points, above the cap of {cap}")]
    GridTooLarge { count: u128, cap: u64 },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid optimizer setting: {0}")]
    InvalidArgument(String),
}

/// Per-dimension `(low, high)` search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds(Vec<(f64, f64)>);

impl Bounds {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self, OptimizeError> {
        if pairs.is_empty() {
            return Err(OptimizeError::InvalidBounds("no dimensions".into()));
        }
        for (i, &(lo, hi)) in pairs.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(OptimizeError::InvalidBounds(format!(
                    "dimension {i}: need finite low < high, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self(pairs))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.0.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.0).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.0) {
            *v = v.clamp(lo, hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    /// Best value seen so far, one entry per epoch (or per batch for grids).
    pub history: Vec<f64>,
}

fn eval_checked<F>(f: &F, x: &[f64]) -> Result<f64, OptimizeError>
where
    F: Fn(&[f64]) -> Result<f64, ObjectiveError>,
{
    match f(x) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(OptimizeError::NonFiniteObjective { point: x.to_vec() }),
        Err(source) => Err(OptimizeError::Objective {
            point: x.to_vec(),
            source,
        }),
    }
}

struct Workers(Option<ThreadPool>);

impl Workers {
    fn new(processes: usize) -> Result<Self, OptimizeError> {
        if processes <= 1 {
            return Ok(Self(None));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(processes)
            .build()
            .map(|p| Self(Some(p)))
            .map_err(|e| OptimizeError::InvalidArgument(format!("worker pool: {e}")))
    }

    /// Evaluates every point; the first failure in point order wins.
    fn evaluate<F>(&self, f: &F, points: &[Vec<f64>]) -> Result<Vec<f64>, OptimizeError>
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
    {
        let results: Vec<Result<f64, OptimizeError>> = match &self.0 {
            None => points.iter().map(|x| eval_checked(f, x)).collect(),
            Some(pool) => pool.install(|| points.par_iter().map(|x| eval_checked(f, x)).collect()),
        };
        results.into_iter().collect()
    }
}

fn seeded_rng(seed: Option<u64>) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.unwrap_or_else(rand::random))
}

/// `ceil(x)`, treating values within a relative 1e-9 of an integer as that integer.
fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Central finite-difference gradient.
pub fn central_gradient<F>(f: &F, x: &[f64], h: f64) -> Result<Vec<f64>, OptimizeError>
where
    F: Fn(&[f64]) -> Result<f64, ObjectiveError>,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = eval_checked(f, &probe)?;
        probe[i] = x[i] - h;
        let down = eval_checked(f, &probe)?;
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Adam with central finite-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub steps: usize,
    pub stepsize: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub fd_step: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            steps: 100,
            stepsize: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            fd_step: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamOutcome {
    pub x: Vec<f64>,
    /// Objective value after each step.
    pub history: Vec<f64>,
}

impl Adam {
    pub fn new(steps: usize, stepsize: f64) -> Self {
        Self {
            steps,
            stepsize,
            ..Self::default()
        }
    }

    pub fn minimize<F>(&self, f: F, x0: &[f64]) -> Result<AdamOutcome, OptimizeError>
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError>,
    {
        if !(self.stepsize > 0.0) {
            return Err(OptimizeError::InvalidArgument(format!(
                "stepsize must be positive, got {}",
                self.stepsize
            )));
        }
        let mut x = x0.to_vec();
        let mut m = vec![0.0; x.len()];
        let mut v = vec![0.0; x.len()];
        let mut history = Vec::with_capacity(self.steps);
        for t in 1..=self.steps {
            let g = central_gradient(&f, &x, self.fd_step)?;
            let c1 = 1.0 - self.beta1.powi(t as i32);
            let c2 = 1.0 - self.beta2.powi(t as i32);
            for i in 0..x.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                x[i] -= self.stepsize * m_hat / (v_hat.sqrt() + self.eps);
            }
            history.push(eval_checked(&f, &x)?);
        }
        Ok(AdamOutcome { x, history })
    }
}

/// Exhaustive search over `{low, low + step, ...}` within each half-open
/// interval `[low, high)`, in row-major order (first dimension slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub steps: Vec<f64>,
    pub max_evaluations: u64,
    pub processes: usize,
}

pub const DEFAULT_GRID_CAP: u64 = 10_000_000;
const GRID_BATCH: usize = 8192;

impl GridSearch {
    pub fn new(steps: Vec<f64>) -> Self {
        Self {
            steps,
            max_evaluations: DEFAULT_GRID_CAP,
            processes: 1,
        }
    }

    /// Number of grid points along `[low, high)` with spacing `step`.
    pub fn axis_len(low: f64, high: f64, step: f64) -> u64 {
        snapped_ceil((high - low) / step).max(1.0) as u64
    }

    fn axes(&self, bounds: &Bounds) -> Result<Vec<u64>, OptimizeError> {
        if self.steps.len() != bounds.dim() {
            return Err(OptimizeError::InvalidArgument(format!(
                "{} grid steps for {} dimensions",
                self.steps.len(),
                bounds.dim()
            )));
        }
        if let Some(s) = self.steps.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(OptimizeError::InvalidArgument(format!("grid step must be positive, got {s}")));
        }
        Ok(bounds
            .pairs()
            .iter()
            .zip(&self.steps)
            .map(|(&(lo, hi), &s)| Self::axis_len(lo, hi, s))
            .collect())
    }

    /// Total number of grid points for `bounds`.
    pub fn point_count(&self, bounds: &Bounds) -> Result<u128, OptimizeError> {
        Ok(self.axes(bounds)?.iter().map(|&n| u128::from(n)).product())
    }

    pub fn minimize<F>(&self, f: F, bounds: &Bounds) -> Result<SearchOutcome, OptimizeError>
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
    {
        self.minimize_observed(f, bounds, |_, _| {})
    }

    /// As [`GridSearch::minimize`], calling `observe` on every evaluation in grid order.
    pub fn minimize_observed<F, O>(&self, f: F, bounds: &Bounds, mut observe: O) -> Result<SearchOutcome, OptimizeError>
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
        O: FnMut(&[f64], f64),
    {
        let axes = self.axes(bounds)?;
        let count: u128 = axes.iter().map(|&n| u128::from(n)).product();
        if count > u128::from(self.max_evaluations) {
            return Err(OptimizeError::GridTooLarge {
                count,
                cap: self.max_evaluations,
            });
        }
        let count = count as usize;
        let workers = Workers::new(self.processes)?;
        let point_at = |mut index: usize| -> Vec<f64> {
            let mut x = vec![0.0; axes.len()];
            for d in (0..axes.len()).rev() {
                let n = axes[d] as usize;
                let (lo, _) = bounds.pairs()[d];
                x[d] = lo + (index % n) as f64 * self.steps[d];
                index /= n;
            }
            x
        };

        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut history = Vec::new();
        let mut start = 0;
        while start < count {
            let end = (start + GRID_BATCH).min(count);
            let points: Vec<Vec<f64>> = (start..end).map(point_at).collect();
            let values = workers.evaluate(&f, &points)?;
            for (x, v) in points.into_iter().zip(values) {
                observe(&x, v);
                if best.as_ref().is_none_or(|(_, b)| v < *b) {
                    best = Some((x, v));
                }
            }
            history.push(best.as_ref().map_or(f64::INFINITY, |b| b.1));
            start = end;
        }
        let (best, best_value) = best.expect("a grid has at least one point");
        Ok(SearchOutcome {
            best,
            best_value,
            evaluations: count,
            history,
        })
    }
}

/// Uniform i.i.d. sampling within the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSearch {
    pub samples: usize,
    pub seed: Option<u64>,
    pub processes: usize,
}

impl RandomSearch {
    pub fn new(samples: usize, seed: Option<u64>) -> Self {
        Self {
            samples,
            seed,
            processes: 1,
        }
    }

    pub fn minimize<F>(&self, f: F, bounds: &Bounds) -> Result<SearchOutcome, OptimizeError>
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
    {
        self.minimize_observed(f, bounds, |_, _| {})
    }

    pub fn minimize_observed<F, O>(&self, f: F, bounds: &Bounds, mut observe: O) -> Result<SearchOutcome, OptimizeError>
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
        O: FnMut(&[f64], f64),
    {
        if self.samples == 0 {
            return Err(OptimizeError::InvalidArgument("random search needs at least one sample".into()));
        }
        let mut rng = seeded_rng(self.seed);
        let points: Vec<Vec<f64>> = (0..self.samples)
            .map(|_| bounds.pairs().iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect())
            .collect();
        let values = Workers::new(self.processes)?.evaluate(&f, &points)?;
        let mut best = 0;
        for (i, (x, &v)) in points.iter().zip(&values).enumerate() {
            observe(x, v);
            if v < values[best] {
                best = i;
            }
        }
        Ok(SearchOutcome {
            best: points[best].clone(),
            best_value: values[best],
            evaluations: self.samples,
            history: vec![values[best]],
        })
    }
}

/// Cross-entropy method with an axis-aligned Gaussian sampling model.
///
/// Each epoch draws `samples_per_epoch` points, clips them to the bounds,
/// keeps the `ceil(elite_frac * samples)` best and refits mean and standard
/// deviation to those elites. The initial model is centred on the bounds
/// with a standard deviation of half the width.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy {
    pub epochs: usize,
    pub samples_per_epoch: usize,
    pub elite_frac: f64,
    pub processes: usize,
    pub seed: Option<u64>,
    pub std_floor: f64,
}

impl Default for CrossEntropy {
    fn default() -> Self {
        Self {
            epochs: 10,
            samples_per_epoch: 200,
            elite_frac: 0.1,
            processes: 1,
            seed: None,
            std_floor: 1e-6,
        }
    }
}

impl CrossEntropy {
    pub fn elite_count(&self) -> usize {
        (snapped_ceil(self.elite_frac * self.samples_per_epoch as f64) as usize).clamp(1, self.samples_per_epoch)
    }

    pub fn minimize<F>(&self, f: F, bounds: &Bounds) -> Result<SearchOutcome, OptimizeError>
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
    {
        self.minimize_observed(f, bounds, |_, _| {})
    }

    pub fn minimize_observed<F, O>(&self, f: F, bounds: &Bounds, mut observe: O) -> Result<SearchOutcome, OptimizeError>
    where
        F: Fn(&[f64]) -> Result<f64, ObjectiveError> + Sync,
        O: FnMut(&[f64], f64),
    {
        if self.epochs == 0 {
            return Err(OptimizeError::InvalidArgument("cem needs at least one epoch".into()));
        }
        if self.samples_per_epoch < 2 {
            return Err(OptimizeError::InvalidArgument("cem needs at least two samples per epoch".into()));
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 1.0) {
            return Err(OptimizeError::InvalidArgument(format!(
                "elite_frac must lie in (0, 1], got {}",
                self.elite_frac
            )));
        }
        let workers = Workers::new(self.processes)?;
        let mut rng = seeded_rng(self.seed);
        let mut mean = bounds.midpoint();
        let mut std: Vec<f64> = bounds.pairs().iter().map(|(lo, hi)| 0.5 * (hi - lo)).collect();
        let n_elite = self.elite_count();

        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut history = Vec::with_capacity(self.epochs);
        for _ in 0..self.epochs {
            let points: Vec<Vec<f64>> = (0..self.samples_per_epoch)
                .map(|_| {
                    let mut x: Vec<f64> = mean
                        .iter()
                        .zip(&std)
                        .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    bounds.clip(&mut x);
                    x
                })
                .collect();
            let values = workers.evaluate(&f, &points)?;
            for (x, &v) in points.iter().zip(&values) {
                observe(x, v);
                if best.as_ref().is_none_or(|(_, b)| v < *b) {
                    best = Some((x.clone(), v));
                }
            }
            history.push(best.as_ref().map_or(f64::INFINITY, |b| b.1));

            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            let elites = &order[..n_elite];
            for d in 0..mean.len() {
                let m = elites.iter().map(|&i| points[i][d]).sum::<f64>() / n_elite as f64;
                let var = elites.iter().map(|&i| (points[i][d] - m).powi(2)).sum::<f64>() / n_elite as f64;
                mean[d] = m;
                std[d] = var.sqrt().max(self.std_floor);
            }
        }
        let (best, best_value) = best.expect("at least one epoch ran");
        Ok(SearchOutcome {
            best,
            best_value,
            evaluations: self.epochs * self.samples_per_epoch,
            history,
        })
    }
}
