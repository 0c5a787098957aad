//! Constrained binary optimization problems.
//!
//! A [`Problem`] is a minimization objective plus a list of constraints over
//! a fixed, ordered set of binary variables. Its score is the objective value
//! at feasible assignments and a caller-chosen penalty everywhere else.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::{parse_expression, ParseError};
use crate::poly::IndexedPoly;
use crate::Polynomial;

/// Absolute slack used when checking constraints at an assignment.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("unknown variable `{0}`: not part of the problem's binary variables")]
    UnknownVariable(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "==", alias = "eq", alias = "=")]
    Eq,
    #[serde(rename = "<=", alias = "le")]
    Le,
    #[serde(rename = ">=", alias = "ge")]
    Ge,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::Eq => "==",
            Comparison::Le => "<=",
            Comparison::Ge => ">=",
        })
    }
}

/// How an inequality is folded into the unconstrained objective.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum InequalityMethod {
    /// Rewrite to an equality with binary-encoded slack variables.
    #[default]
    Slack,
    /// Penalize `-l1*h + l2*h^2` on the constraint gap `h` directly.
    Unbalanced { lambda1: f64, lambda2: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: Polynomial,
    pub rhs: Polynomial,
    pub op: Comparison,
    pub label: String,
    pub method: InequalityMethod,
    /// Penalty weight index; 0 is reserved for the objective.
    pub group: usize,
}

impl Constraint {
    pub fn eq(lhs: Polynomial, rhs: Polynomial, label: impl Into<String>, group: usize) -> Self {
        Self {
            lhs,
            rhs,
            op: Comparison::Eq,
            label: label.into(),
            method: InequalityMethod::Slack,
            group,
        }
    }

    /// `lhs - rhs`.
    pub fn difference(&self) -> Polynomial {
        &self.lhs - &self.rhs
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.lhs
            .variables()
            .into_iter()
            .chain(self.rhs.variables())
            .collect()
    }
}

fn satisfied(op: Comparison, diff: f64) -> bool {
    match op {
        Comparison::Eq => diff.abs() <= FEASIBILITY_TOLERANCE,
        Comparison::Le => diff <= FEASIBILITY_TOLERANCE,
        Comparison::Ge => diff >= -FEASIBILITY_TOLERANCE,
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    name: String,
    objective: Polynomial,
    constraints: Vec<Constraint>,
    binary_vars: Vec<String>,
    indexed_objective: IndexedPoly<f64>,
    indexed_constraints: Vec<(IndexedPoly<f64>, Comparison)>,
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        objective: Polynomial,
        constraints: Vec<Constraint>,
        binary_vars: Vec<String>,
    ) -> Result<Self, ProblemError> {
        let known: BTreeSet<&String> = binary_vars.iter().collect();
        if known.len() != binary_vars.len() {
            return Err(ProblemError::InvalidInstance("duplicate binary variable".into()));
        }
        for v in objective
            .variables()
            .into_iter()
            .chain(constraints.iter().flat_map(Constraint::variables))
        {
            if !known.contains(&v) {
                return Err(ProblemError::UnknownVariable(v));
            }
        }
        if let Some(c) = constraints.iter().find(|c| c.group == 0) {
            return Err(ProblemError::InvalidInstance(format!(
                "constraint `{}` uses group 0, which is reserved for the objective",
                c.label
            )));
        }
        let indexed_objective = objective
            .index(&binary_vars)
            .map_err(|e| ProblemError::InvalidInstance(e.to_string()))?;
        let indexed_constraints = constraints
            .iter()
            .map(|c| {
                c.difference()
                    .index(&binary_vars)
                    .map(|p| (p, c.op))
                    .map_err(|e| ProblemError::InvalidInstance(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            name: name.into(),
            objective,
            constraints,
            binary_vars,
            indexed_objective,
            indexed_constraints,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn objective(&self) -> &Polynomial {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn binary_vars(&self) -> &[String] {
        &self.binary_vars
    }

    /// Highest constraint group index (0 for unconstrained problems).
    pub fn group_count(&self) -> usize {
        self.constraints.iter().map(|c| c.group).max().unwrap_or(0)
    }

    /// Objective value at `bits`, given in `binary_vars` order. Extra trailing
    /// entries (slack variables) are ignored.
    pub fn objective_value(&self, bits: &[u8]) -> f64 {
        self.indexed_objective.eval_bits(bits)
    }

    pub fn is_feasible(&self, bits: &[u8]) -> bool {
        self.indexed_constraints
            .iter()
            .all(|(diff, op)| satisfied(*op, diff.eval_bits(bits)))
    }

    /// Objective value if every constraint holds at `bits`, `penalty` otherwise.
    pub fn score(&self, bits: &[u8], penalty: f64) -> f64 {
        if self.is_feasible(bits) {
            self.objective_value(bits)
        } else {
            penalty
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub max_weight: u32,
    pub weights: Vec<u32>,
    pub values: Vec<f64>,
}

/// Knapsack with a one-hot encoding of the total weight.
///
/// Variables are `x0..x{N-1}` (item taken) followed by `y1..yW` (total weight
/// equals `i`). Group 1 is the one-hot constraint, group 2 ties the encoded
/// weight to the chosen items. With this encoding the empty knapsack is
/// infeasible, since exactly one `y_i` with `i >= 1` must be set.
pub fn knapsack(inst: &KnapsackInstance) -> Result<Problem, ProblemError> {
    let n = inst.weights.len();
    if n == 0 || inst.values.len() != n {
        return Err(ProblemError::InvalidInstance(format!(
            "knapsack needs matching non-empty weights and values (got {} and {})",
            n,
            inst.values.len()
        )));
    }
    if inst.max_weight == 0 {
        return Err(ProblemError::InvalidInstance("max_weight must be positive".into()));
    }
    if inst.weights.contains(&0) {
        return Err(ProblemError::InvalidInstance("item weights must be positive".into()));
    }
    if inst.values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(ProblemError::InvalidInstance("item values must be positive".into()));
    }

    let xs: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let ys: Vec<String> = (1..=inst.max_weight).map(|i| format!("y{i}")).collect();

    let mut objective = Polynomial::zero();
    let mut item_weight = Polynomial::zero();
    for (i, x) in xs.iter().enumerate() {
        objective = objective - Polynomial::var(x).scale(inst.values[i]);
        item_weight = item_weight + Polynomial::var(x).scale(f64::from(inst.weights[i]));
    }
    let mut one_hot = Polynomial::zero();
    let mut encoded_weight = Polynomial::zero();
    for (i, y) in ys.iter().enumerate() {
        one_hot = one_hot + Polynomial::var(y);
        encoded_weight = encoded_weight + Polynomial::var(y).scale((i + 1) as f64);
    }

    let constraints = vec![
        Constraint::eq(one_hot, Polynomial::constant(1.0), "encoding", 1),
        Constraint::eq(encoded_weight - item_weight, Polynomial::zero(), "weight", 2),
    ];
    let vars = xs.into_iter().chain(ys).collect();
    Problem::new("knapsack", objective, constraints, vars)
}

/// Max-cut as an unconstrained minimization: each cut edge contributes -1.
pub fn maxcut(edges: &[(usize, usize)]) -> Result<Problem, ProblemError> {
    if edges.is_empty() {
        return Err(ProblemError::InvalidInstance("maxcut needs at least one edge".into()));
    }
    let mut seen = BTreeSet::new();
    for &(u, v) in edges {
        if u == v {
            return Err(ProblemError::InvalidInstance(format!("self-loop on vertex {u}")));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(ProblemError::InvalidInstance(format!("duplicate edge ({u}, {v})")));
        }
    }
    let vertices: BTreeSet<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    let name = |v: usize| format!("x{v}");
    let mut objective = Polynomial::zero();
    for &(u, v) in edges {
        let (xu, xv) = (Polynomial::var(&name(u)), Polynomial::var(&name(v)));
        objective = objective + (&xu * &xv).scale(2.0) - xu - xv;
    }
    Problem::new("maxcut", objective, vec![], vertices.into_iter().map(name).collect())
}

/// Name of the TSP variable "city `v` is visited at step `t`".
pub fn tsp_var(v: usize, t: usize) -> String {
    format!("x_{v}_{t}")
}

/// Travelling salesman with a city-by-step one-hot encoding.
///
/// Groups `1..=n` force one city per step, groups `n+1..=2n` force each
/// city to appear once.
pub fn tsp(dist: &[Vec<f64>]) -> Result<Problem, ProblemError> {
    let n = dist.len();
    if n < 3 {
        return Err(ProblemError::InvalidInstance("tsp needs at least 3 cities".into()));
    }
    for (u, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(ProblemError::InvalidInstance("distance matrix is not square".into()));
        }
        for (v, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(ProblemError::InvalidInstance(format!("bad distance d({u},{v}) = {d}")));
            }
            if (d - dist[v][u]).abs() > 1e-12 {
                return Err(ProblemError::InvalidInstance(format!(
                    "distance matrix is not symmetric at ({u},{v})"
                )));
            }
        }
        if row[u] != 0.0 {
            return Err(ProblemError::InvalidInstance(format!("non-zero diagonal at {u}")));
        }
    }

    let x = |v: usize, t: usize| Polynomial::var(&tsp_var(v, t));
    let mut objective = Polynomial::zero();
    for t in 0..n {
        for u in 0..n {
            for v in 0..n {
                if u != v && dist[u][v] != 0.0 {
                    objective = objective + (x(u, t) * x(v, (t + 1) % n)).scale(dist[u][v]);
                }
            }
        }
    }
    let mut constraints = Vec::with_capacity(2 * n);
    for t in 0..n {
        let lhs = (0..n).fold(Polynomial::zero(), |acc, v| acc + x(v, t));
        constraints.push(Constraint::eq(lhs, Polynomial::constant(1.0), format!("step_{t}"), t + 1));
    }
    for v in 0..n {
        let lhs = (0..n).fold(Polynomial::zero(), |acc, t| acc + x(v, t));
        constraints.push(Constraint::eq(lhs, Polynomial::constant(1.0), format!("city_{v}"), n + v + 1));
    }
    let vars = (0..n)
        .flat_map(|v| (0..n).map(move |t| tsp_var(v, t)))
        .collect();
    Problem::new("tsp", objective, constraints, vars)
}

/// One textual constraint of a custom problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSource {
    pub lhs: String,
    pub op: Comparison,
    pub rhs: String,
    pub method: InequalityMethod,
    pub label: Option<String>,
}

/// Builds a problem from expression strings. Each constraint gets its own
/// penalty group, numbered from 1 in order. Variables are `declared` in the
/// given order, or every variable of the objective and constraints sorted by
/// name.
pub fn custom(
    objective: &str,
    constraints: &[ConstraintSource],
    declared: Option<&[String]>,
) -> Result<Problem, ProblemError> {
    let objective: Polynomial = parse_expression(objective)?;
    let mut parsed = Vec::with_capacity(constraints.len());
    for (i, src) in constraints.iter().enumerate() {
        parsed.push(Constraint {
            lhs: parse_expression(&src.lhs)?,
            rhs: parse_expression(&src.rhs)?,
            op: src.op,
            label: src.label.clone().unwrap_or_else(|| format!("c{}", i + 1)),
            method: src.method,
            group: i + 1,
        });
    }
    let vars: Vec<String> = match declared {
        Some(vars) => vars.to_vec(),
        None => objective
            .variables()
            .into_iter()
            .chain(parsed.iter().flat_map(Constraint::variables))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    Problem::new("custom", objective, parsed, vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_instance() -> KnapsackInstance {
        KnapsackInstance {
            max_weight: 2,
            weights: vec![1, 1, 1],
            values: vec![2.0, 2.0, 1.0],
        }
    }

    fn bits_of(k: usize, n: usize) -> Vec<u8> {
        (0..n).map(|i| (k >> i & 1) as u8).collect()
    }

    #[test]
    fn knapsack_variables() {
        let p = knapsack(&small_instance()).unwrap();
        assert_eq!(p.binary_vars(), ["x0", "x1", "x2", "y1", "y2"]);
        assert_eq!(p.group_count(), 2);
    }

    #[test]
    fn knapsack_scores_small_instance() {
        let p = knapsack(&small_instance()).unwrap();
        assert_eq!(p.score(&[1, 1, 0, 0, 1], 0.0), -4.0);
        assert_eq!(p.score(&[1, 0, 1, 0, 1], 0.0), -3.0);
        assert_eq!(p.score(&[1, 0, 1, 1, 0], 0.0), 0.0);
        assert_eq!(p.score(&[0, 0, 0, 0, 0], 7.0), 7.0);
    }

    #[test]
    fn knapsack_rejects_bad_instances() {
        let mut inst = small_instance();
        inst.values.pop();
        assert!(matches!(knapsack(&inst), Err(ProblemError::InvalidInstance(_))));
        let mut inst = small_instance();
        inst.weights[1] = 0;
        assert!(knapsack(&inst).is_err());
        let mut inst = small_instance();
        inst.max_weight = 0;
        assert!(knapsack(&inst).is_err());
        let mut inst = small_instance();
        inst.values[0] = -1.0;
        assert!(knapsack(&inst).is_err());
    }

    #[test]
    fn knapsack_score_agrees_with_objective_on_feasible_points() {
        let p = knapsack(&small_instance()).unwrap();
        let mut best = f64::INFINITY;
        for k in 0..32 {
            let b = bits_of(k, 5);
            let s = p.score(&b, 0.0);
            if p.is_feasible(&b) {
                assert_eq!(s, p.objective_value(&b));
            } else {
                assert_eq!(s, 0.0);
            }
            best = best.min(s);
        }
        assert_eq!(best, -4.0);
    }

    #[test]
    fn maxcut_examples() {
        let tri = maxcut(&[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(tri.objective_value(&[1, 0, 0]), -2.0);
        assert_eq!(tri.objective_value(&[0, 0, 0]), 0.0);
        let min = (0..8).map(|k| tri.score(&bits_of(k, 3), 0.0)).fold(f64::INFINITY, f64::min);
        assert_eq!(min, -2.0);
        let single = maxcut(&[(0, 1)]).unwrap();
        assert_eq!(single.score(&[1, 0], 0.0), -1.0);
        assert!(maxcut(&[(2, 2)]).is_err());
        assert!(maxcut(&[]).is_err());
    }

    fn perm_bits(perm: &[usize]) -> Vec<u8> {
        let n = perm.len();
        let mut bits = vec![0u8; n * n];
        for (t, &v) in perm.iter().enumerate() {
            bits[v * n + t] = 1;
        }
        bits
    }

    #[test]
    fn tsp_uniform_distances() {
        let d = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let p = tsp(&d).unwrap();
        assert_eq!(p.binary_vars().len(), 9);
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [2, 1, 0]] {
            assert_eq!(p.score(&perm_bits(&perm), 99.0), 3.0);
        }
        let mut two_in_step = perm_bits(&[0, 1, 2]);
        two_in_step[3] = 1; // city 1 also at step 0
        assert_eq!(p.score(&two_in_step, 99.0), 99.0);
    }

    #[test]
    fn tsp_feasible_count_and_optimum() {
        let d = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]];
        let p = tsp(&d).unwrap();
        let mut feasible = 0;
        let mut best = f64::INFINITY;
        for k in 0..(1 << 9) {
            let b = bits_of(k, 9);
            if p.is_feasible(&b) {
                feasible += 1;
                best = best.min(p.objective_value(&b));
            }
        }
        assert_eq!(feasible, 6);
        assert_eq!(best, 6.0);
    }

    #[test]
    fn tsp_rejects_bad_matrices() {
        assert!(tsp(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        let asym = vec![vec![0.0, 1.0, 1.0], vec![2.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(tsp(&asym).is_err());
        let neg = vec![vec![0.0, -1.0, 1.0], vec![-1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(tsp(&neg).is_err());
    }

    #[test]
    fn custom_problem_with_inequality() {
        let c = ConstraintSource {
            lhs: "x0 + x1".into(),
            op: Comparison::Le,
            rhs: "1".into(),
            method: InequalityMethod::Slack,
            label: None,
        };
        let p = custom("-x0 - x1", &[c], None).unwrap();
        let scores: Vec<f64> = (0..4).map(|k| p.score(&bits_of(k, 2), 10.0)).collect();
        assert_eq!(scores, vec![0.0, -1.0, -1.0, 10.0]);
    }

    #[test]
    fn custom_problem_errors() {
        let p = custom("x0", &[], None).unwrap();
        assert_eq!(p.score(&[0], 0.0), 0.0);
        assert!(matches!(custom("x0 +", &[], None), Err(ProblemError::Parse(_))));
        let c = ConstraintSource {
            lhs: "x0 + z".into(),
            op: Comparison::Eq,
            rhs: "1".into(),
            method: InequalityMethod::Slack,
            label: None,
        };
        let declared = vec!["x0".to_string()];
        assert!(matches!(
            custom("x0", std::slice::from_ref(&c), Some(&declared)),
            Err(ProblemError::UnknownVariable(v)) if v == "z"
        ));
        assert_eq!(custom("x0", &[c], None).unwrap().binary_vars(), ["x0", "z"]);
    }
}
