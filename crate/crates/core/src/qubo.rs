//! Penalized QUBO assembly, inequality handling and the Ising transform.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{IndexedPoly, Monomial, Poly};
use crate::problems::{Comparison, Constraint, InequalityMethod, Problem};
use crate::scalar::Scalar;
use crate::Polynomial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvertError {
    #[error("expected {expected} penalty weights (objective + {groups} constraint groups), got {got}")]
    WeightCountMismatch {
        expected: usize,
        groups: usize,
        got: usize,
    },
    #[error("penalty weights must be finite and non-negative, got {0:?}")]
    InvalidWeights(Vec<f64>),
    #[error("penalized objective has degree {0} after binary reduction; at most 2 is supported")]
    DegreeError(usize),
    #[error("cannot encode slack for constraint `{label}`: {reason}")]
    UnboundedSlack { label: String, reason: String },
    #[error("unbalanced penalization needs positive finite lambdas, got ({0}, {1})")]
    InvalidLambda(f64, f64),
    #[error("constraint `{0}` is an equality; only inequalities take slack or unbalanced penalties")]
    NotAnInequality(String),
    #[error("invalid QUBO: {0}")]
    InvalidQubo(String),
}

/// Penalty weights: index 0 scales the objective, index `g` constraint group `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperArgs(Vec<f64>);

impl HyperArgs {
    pub fn new(alphas: Vec<f64>) -> Result<Self, ConvertError> {
        if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(ConvertError::InvalidWeights(alphas));
        }
        Ok(Self(alphas))
    }

    /// All weights equal to one, sized for `problem`.
    pub fn ones_for(problem: &Problem) -> Self {
        Self(vec![1.0; problem.group_count() + 1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Quadratic polynomial over binary variables with its constant kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Qubo<T> {
    poly: Poly<T>,
    offset: T,
    var_order: Vec<String>,
    indexed: IndexedPoly<T>,
}

impl<T: Scalar> Qubo<T> {
    /// Builds a QUBO, moving any constant term of `poly` into the offset.
    pub fn new(poly: Poly<T>, offset: T, var_order: Vec<String>) -> Result<Self, ConvertError> {
        let unique: BTreeSet<&String> = var_order.iter().collect();
        if unique.len() != var_order.len() {
            return Err(ConvertError::InvalidQubo("duplicate variable in var_order".into()));
        }
        for (m, _) in poly.terms() {
            if m.degree() > 2 {
                return Err(ConvertError::DegreeError(m.degree()));
            }
            if m.degree() == 2 && m.vars()[0] == m.vars()[1] {
                return Err(ConvertError::InvalidQubo(format!("squared variable in {m}")));
            }
        }
        let offset = offset + poly.constant_term();
        let poly = poly.without_constant();
        let indexed = poly
            .index(&var_order)
            .map_err(|e| ConvertError::InvalidQubo(e.to_string()))?;
        Ok(Self {
            poly,
            offset,
            var_order,
            indexed,
        })
    }

    pub fn poly(&self) -> &Poly<T> {
        &self.poly
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn var_order(&self) -> &[String] {
        &self.var_order
    }

    pub fn num_vars(&self) -> usize {
        self.var_order.len()
    }

    /// Coefficient of a linear (`[a]`) or quadratic (`[a, b]`) term.
    pub fn coeff(&self, vars: &[&str]) -> T {
        self.poly.coeff_of(vars)
    }

    /// Energy including the offset, at bits given in `var_order`.
    pub fn energy(&self, bits: &[u8]) -> T {
        self.indexed.eval_bits(bits) + self.offset
    }

    /// Energy of the basis index whose bit `i` is variable `i`.
    pub fn energy_of_index(&self, index: usize) -> T {
        self.indexed.eval_index(index) + self.offset
    }

    pub fn cast<U: Scalar>(&self) -> Qubo<U> {
        Qubo::new(self.poly.cast(), U::of(self.offset.as_f64()), self.var_order.clone())
            .expect("a valid QUBO stays valid under a coefficient cast")
    }
}

/// Rewrites an inequality as an equality with binary slack variables named
/// `{prefix}0, {prefix}1, ...`.
///
/// For `lhs <= rhs` the gap `rhs - lhs` lies in `0..=M` on feasible points,
/// where `M` is bounded by the constant plus the positive coefficients of the
/// binary-reduced gap. The slack encodes exactly `0..=M` with weights
/// `1, 2, 4, ..., 2^(k-1), M - (2^k - 1)`. `>=` is handled by swapping sides.
pub fn apply_slack(c: &Constraint, prefix: &str) -> Result<(Constraint, Vec<String>), ConvertError> {
    let gap = match c.op {
        Comparison::Le => &c.rhs - &c.lhs,
        Comparison::Ge => &c.lhs - &c.rhs,
        Comparison::Eq => return Err(ConvertError::NotAnInequality(c.label.clone())),
    }
    .reduce_binary_powers();
    let unbounded = |reason: String| ConvertError::UnboundedSlack {
        label: c.label.clone(),
        reason,
    };
    if let Some((m, coeff)) = gap.terms().find(|(_, v)| (v - v.round()).abs() > 1e-9) {
        return Err(unbounded(format!("non-integer coefficient {coeff} on {m}")));
    }
    let max_gap: f64 = gap.constant_term()
        + gap
            .terms()
            .filter(|(m, v)| !m.is_constant() && *v > 0.0)
            .map(|(_, v)| v)
            .sum::<f64>();
    let max_gap = max_gap.round();
    if max_gap < 0.0 {
        return Err(unbounded(format!(
            "constraint is infeasible for every assignment (largest gap {max_gap})"
        )));
    }

    let weights = slack_weights(max_gap as u64);
    let names: Vec<String> = (0..weights.len()).map(|k| format!("{prefix}{k}")).collect();
    let slack = names
        .iter()
        .zip(&weights)
        .fold(Polynomial::zero(), |acc, (n, &w)| acc + Polynomial::var(n).scale(w as f64));
    let (lhs, rhs) = match c.op {
        Comparison::Le => (&c.lhs + &slack, c.rhs.clone()),
        _ => (&c.rhs + &slack, c.lhs.clone()),
    };
    let eq = Constraint {
        lhs,
        rhs,
        op: Comparison::Eq,
        label: c.label.clone(),
        method: InequalityMethod::Slack,
        group: c.group,
    };
    Ok((eq, names))
}

/// Bounded binary weights whose subset sums cover exactly `0..=max`.
pub fn slack_weights(max: u64) -> Vec<u64> {
    if max == 0 {
        return Vec::new();
    }
    let k = 63 - max.leading_zeros() as u64; // floor(log2(max))
    let mut weights: Vec<u64> = (0..k).map(|i| 1u64 << i).collect();
    weights.push(max - ((1u64 << k) - 1));
    weights
}

/// Unbalanced penalty `-l1*h + l2*h^2` with `h >= 0` exactly on feasible points.
pub fn apply_unbalanced(c: &Constraint, lambda1: f64, lambda2: f64) -> Result<Polynomial, ConvertError> {
    if !(lambda1 > 0.0 && lambda2 > 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
        return Err(ConvertError::InvalidLambda(lambda1, lambda2));
    }
    let h = match c.op {
        Comparison::Le => &c.rhs - &c.lhs,
        Comparison::Ge => &c.lhs - &c.rhs,
        Comparison::Eq => return Err(ConvertError::NotAnInequality(c.label.clone())),
    };
    Ok((h.scale(-lambda1) + h.pow(2).scale(lambda2)).reduce_binary_powers())
}

/// Penalty contributed by one constraint, before group weighting, plus any
/// slack variables it introduced.
fn constraint_penalty(
    c: &Constraint,
    index: usize,
    taken: &BTreeSet<String>,
) -> Result<(Polynomial, Vec<String>), ConvertError> {
    match (c.op, c.method) {
        (Comparison::Eq, _) => Ok((c.difference().pow(2), Vec::new())),
        (_, InequalityMethod::Slack) => {
            let mut prefix = format!("s{index}_");
            while taken.iter().any(|v| v.starts_with(&prefix)) {
                prefix.insert(0, '_');
            }
            let (eq, slacks) = apply_slack(c, &prefix)?;
            Ok((eq.difference().pow(2), slacks))
        }
        (_, InequalityMethod::Unbalanced { lambda1, lambda2 }) => {
            Ok((apply_unbalanced(c, lambda1, lambda2)?, Vec::new()))
        }
    }
}

/// Weighted sum of the objective and constraint penalties as a QUBO.
///
/// The variable order is the problem's binary variables followed by any
/// slack variables, so the leading entries of a QUBO assignment are always
/// an assignment of the original problem.
pub fn to_qubo(problem: &Problem, args: &HyperArgs) -> Result<Qubo<f64>, ConvertError> {
    let groups = problem.group_count();
    if args.len() != groups + 1 {
        return Err(ConvertError::WeightCountMismatch {
            expected: groups + 1,
            groups,
            got: args.len(),
        });
    }
    let alphas = args.as_slice();
    let mut total = problem.objective().scale(alphas[0]);
    let mut var_order = problem.binary_vars().to_vec();
    let mut taken: BTreeSet<String> = var_order.iter().cloned().collect();
    for (i, c) in problem.constraints().iter().enumerate() {
        let (penalty, slacks) = constraint_penalty(c, i, &taken)?;
        total = total + penalty.scale(alphas[c.group]);
        taken.extend(slacks.iter().cloned());
        var_order.extend(slacks);
    }
    let reduced = total.reduce_binary_powers();
    if reduced.degree() > 2 {
        return Err(ConvertError::DegreeError(reduced.degree()));
    }
    Qubo::new(reduced, 0.0, var_order)
}

/// Spin form of a QUBO under `z = 1 - 2x` (`x = 0` is spin up).
#[derive(Debug, Clone, PartialEq)]
pub struct Ising<T> {
    pub h: Vec<T>,
    /// `(i, j, J_ij)` with `i < j`.
    pub couplings: Vec<(usize, usize, T)>,
    pub offset: T,
    pub var_order: Vec<String>,
}

impl<T: Scalar> Ising<T> {
    pub fn energy(&self, spins: &[i8]) -> T {
        let mut e = self.offset;
        for (i, &hi) in self.h.iter().enumerate() {
            e += hi * T::of(f64::from(spins[i]));
        }
        for &(i, j, jij) in &self.couplings {
            e += jij * T::of(f64::from(spins[i] * spins[j]));
        }
        e
    }

    pub fn coupling(&self, i: usize, j: usize) -> T {
        let (a, b) = (i.min(j), i.max(j));
        self.couplings
            .iter()
            .find(|&&(x, y, _)| x == a && y == b)
            .map_or_else(T::zero, |&(_, _, v)| v)
    }

    /// Per-spin adjacency: `(neighbour, J)` lists.
    pub fn neighbours(&self) -> Vec<Vec<(usize, T)>> {
        let mut adj = vec![Vec::new(); self.h.len()];
        for &(i, j, v) in &self.couplings {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        adj
    }
}

pub fn spins_from_bits(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect()
}

pub fn bits_from_spins(spins: &[i8]) -> Vec<u8> {
    spins.iter().map(|&z| u8::from(z < 0)).collect()
}

/// Exact substitution `x = (1 - z) / 2`.
pub fn qubo_to_ising<T: Scalar>(q: &Qubo<T>) -> Ising<T> {
    let position: HashMap<&str, usize> = q
        .var_order()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let half = T::of(0.5);
    let quarter = T::of(0.25);
    let mut h = vec![T::zero(); q.num_vars()];
    let mut couplings: BTreeMap<(usize, usize), T> = BTreeMap::new();
    let mut offset = q.offset();
    for (m, c) in q.poly().terms() {
        match m.vars() {
            [a] => {
                let i = position[a.as_str()];
                offset += c * half;
                h[i] -= c * half;
            }
            [a, b] => {
                let (i, j) = (position[a.as_str()], position[b.as_str()]);
                let v = c * quarter;
                offset += v;
                h[i] -= v;
                h[j] -= v;
                *couplings.entry((i.min(j), i.max(j))).or_insert_with(T::zero) += v;
            }
            _ => unreachable!("Qubo terms are linear or quadratic"),
        }
    }
    Ising {
        h,
        couplings: couplings.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
        offset,
        var_order: q.var_order().to_vec(),
    }
}

/// Convenience for tests and reports: the QUBO body as a `(vars, coeff)` table.
pub fn coefficient_table<T: Scalar>(q: &Qubo<T>) -> BTreeMap<Monomial, T> {
    q.poly().terms().map(|(m, c)| (m.clone(), c)).collect()
}
