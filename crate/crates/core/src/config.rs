//! Experiment documents.
//!
//! A document has a `problem` section, a `solver` section and optional
//! `seed` and `output` keys. It is read in two passes: a strict structural
//! parse that rejects unknown keys with their full path, then
//! [`solver_from_config`], which checks the combination of keys against the
//! chosen `type`s and builds a [`Solver`].
//!
//! ```yaml
//! problem:
//!   type: knapsack
//!   max_weight: 2
//!   items_weights: [1, 1, 1]
//!   items_values: [2, 2, 1]
//! solver:
//!   type: vqa
//!   pqc: {type: qaoa, layers: 5}
//!   optimizer: {type: qml}
//!   params_inits:
//!     angles: [[0.5, 0.5, 0.5, 0.5, 0.5], [1, 1, 1, 1, 1]]
//!     hyper_args: [1, 2.5, 2.5]
//! ```

use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::optimizers::{Adam, Bounds, CrossEntropy, GridSearch, RandomSearch};
use crate::problems::{self, Comparison, ConstraintSource, InequalityMethod, KnapsackInstance, Problem};
use crate::qubo::HyperArgs;
use crate::simulator::DEFAULT_QUBIT_CAP;
use crate::solvers::{
    AnnealingSettings, EvaluationSettings, HyperOptimizer, HyperSearch, PqcKind, Solver, SolverKind, VqaSettings,
};
use crate::Angles;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: unsupported solver type `{name}`")]
    UnsupportedSolver { path: String, name: String },
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn path(&self) -> &str {
        match self {
            ConfigError::Invalid { path, .. } | ConfigError::UnsupportedSolver { path, .. } => path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_weight: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items_weights: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ExprText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<ConstraintSection>>,
    /// Variable order of a custom problem; defaults to the objective's
    /// variables sorted by name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
}

/// An expression written either as text or as a bare number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprText {
    Number(f64),
    Text(String),
}

impl fmt::Display for ExprText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprText::Number(v) => write!(f, "{v}"),
            ExprText::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    pub lhs: ExprText,
    pub op: Comparison,
    pub rhs: ExprText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pqc: Option<PqcSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper_optimizer: Option<HyperOptimizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params_inits: Option<ParamsInits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_reads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_initial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PqcSection {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepsize: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperOptimizerSection {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elite_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsInits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper_args: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_results: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
}

impl ExperimentConfig {
    /// Parses a YAML or JSON document. Structural errors carry the dotted
    /// path of the offending key.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = serde_yaml::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().to_string();
            let message = message.strip_prefix(&format!("{path}: ")).unwrap_or(&message).to_string();
            ConfigError::at(path, message)
        })
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes to YAML")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes to JSON")
    }

    /// SHA-256 of the compact JSON form, so reformatted documents with the
    /// same content share a digest.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes to JSON");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Keys present in a section, as they appear in the document.
fn present_keys<S: Serialize>(section: &S) -> Vec<String> {
    match serde_json::to_value(section) {
        Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn only_keys<S: Serialize>(section: &S, path: &str, kind: &str, allowed: &[&str]) -> Result<(), ConfigError> {
    match present_keys(section)
        .into_iter()
        .find(|k| k != "type" && !allowed.contains(&k.as_str()))
    {
        Some(k) => Err(ConfigError::at(
            format!("{path}.{k}"),
            format!("not used by type `{kind}`"),
        )),
        None => Ok(()),
    }
}

fn required<T: Clone>(value: &Option<T>, path: &str, key: &str, kind: &str) -> Result<T, ConfigError> {
    value
        .clone()
        .ok_or_else(|| ConfigError::at(format!("{path}.{key}"), format!("required for type `{kind}`")))
}

fn kind_of<'a>(kind: &'a Option<String>, path: &str) -> Result<&'a str, ConfigError> {
    kind.as_deref()
        .ok_or_else(|| ConfigError::at(format!("{path}.type"), "missing required key `type`"))
}

fn positive(value: usize, path: &str) -> Result<usize, ConfigError> {
    if value == 0 {
        Err(ConfigError::at(path, "must be at least 1"))
    } else {
        Ok(value)
    }
}

pub fn problem_from_config(section: &ProblemSection) -> Result<Problem, ConfigError> {
    const P: &str = "problem";
    let kind = kind_of(&section.kind, P)?;
    let invalid = |e: problems::ProblemError| ConfigError::at(P, e.to_string());
    match kind {
        "knapsack" => {
            only_keys(section, P, kind, &["max_weight", "items_weights", "items_values"])?;
            let weights = required(&section.items_weights, P, "items_weights", kind)?;
            let values = required(&section.items_values, P, "items_values", kind)?;
            let max_weight = required(&section.max_weight, P, "max_weight", kind)?;
            problems::knapsack(&KnapsackInstance {
                max_weight,
                weights,
                values,
            })
            .map_err(invalid)
        }
        "tsp" => {
            only_keys(section, P, kind, &["distance_matrix"])?;
            problems::tsp(&required(&section.distance_matrix, P, "distance_matrix", kind)?).map_err(invalid)
        }
        "maxcut" => {
            only_keys(section, P, kind, &["edges"])?;
            problems::maxcut(&required(&section.edges, P, "edges", kind)?).map_err(invalid)
        }
        "custom" => {
            only_keys(section, P, kind, &["objective", "constraints", "variables"])?;
            let objective = required(&section.objective, P, "objective", kind)?.to_string();
            let sources = section
                .constraints
                .iter()
                .flatten()
                .enumerate()
                .map(|(i, c)| constraint_source(c, &format!("{P}.constraints[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            problems::custom(&objective, &sources, section.variables.as_deref()).map_err(invalid)
        }
        other => Err(ConfigError::at(
            format!("{P}.type"),
            format!("unknown problem type `{other}` (expected knapsack, tsp, maxcut or custom)"),
        )),
    }
}

fn constraint_source(c: &ConstraintSection, path: &str) -> Result<ConstraintSource, ConfigError> {
    let method = match (c.method.as_deref().unwrap_or("slack"), c.lambdas) {
        ("slack", None) => InequalityMethod::Slack,
        ("slack", Some(_)) => {
            return Err(ConfigError::at(format!("{path}.lambdas"), "only used with `method: unbalanced`"));
        }
        ("unbalanced", l) => {
            let [lambda1, lambda2] = l.unwrap_or([1.0, 1.0]);
            InequalityMethod::Unbalanced { lambda1, lambda2 }
        }
        (other, _) => {
            return Err(ConfigError::at(
                format!("{path}.method"),
                format!("unknown method `{other}` (expected slack or unbalanced)"),
            ));
        }
    };
    Ok(ConstraintSource {
        lhs: c.lhs.to_string(),
        op: c.op,
        rhs: c.rhs.to_string(),
        method,
        label: c.label.clone(),
    })
}

fn evaluation_settings(section: &Option<EvaluationSection>) -> Result<EvaluationSettings, ConfigError> {
    let mut eval = EvaluationSettings::default();
    if let Some(s) = section {
        eval.penalty = s.penalty.unwrap_or(eval.penalty);
        eval.normalize = s.normalize.unwrap_or(eval.normalize);
        if let Some(limit) = s.limit_results {
            eval.limit_results = positive(limit, "solver.evaluation.limit_results")?;
        }
    }
    Ok(eval)
}

fn vqa_settings(
    s: &SolverSection,
    evaluation: EvaluationSettings,
    qubit_cap: usize,
) -> Result<VqaSettings, ConfigError> {
    const P: &str = "solver";
    only_keys(s, P, "vqa", &["pqc", "optimizer", "hyper_optimizer", "params_inits", "qubit_cap", "evaluation"])?;
    let pqc = required(&s.pqc, P, "pqc", "vqa")?;
    let pqc_kind = match kind_of(&pqc.kind, "solver.pqc")? {
        "qaoa" => PqcKind::Qaoa,
        "wfqaoa" => PqcKind::WfQaoa,
        other => {
            return Err(ConfigError::at(
                "solver.pqc.type",
                format!("unknown pqc type `{other}` (expected qaoa or wfqaoa)"),
            ));
        }
    };
    if let Some(backend) = pqc.backend.as_deref().filter(|b| *b != "default.qubit") {
        return Err(ConfigError::at(
            "solver.pqc.backend",
            format!("unsupported backend `{backend}`; only default.qubit is available"),
        ));
    }
    let rows = s
        .params_inits
        .as_ref()
        .and_then(|p| p.angles.clone())
        .ok_or_else(|| ConfigError::at("solver.params_inits.angles", "required for type `vqa`"))?;
    let angles = Angles::from_rows(&rows).map_err(|e| ConfigError::at("solver.params_inits.angles", e.to_string()))?;
    if let Some(layers) = pqc.layers {
        if layers != angles.layers() {
            return Err(ConfigError::at(
                "solver.params_inits.angles",
                format!("{} angle layers given but pqc.layers is {layers}", angles.layers()),
            ));
        }
    }

    let mut optimizer = Adam::default();
    if let Some(o) = &s.optimizer {
        match kind_of(&o.kind, "solver.optimizer")? {
            "qml" | "adam" => {}
            other => {
                return Err(ConfigError::at(
                    "solver.optimizer.type",
                    format!("unknown optimizer type `{other}` (expected qml or adam)"),
                ));
            }
        }
        if let Some(name) = o.optimizer.as_deref().filter(|n| *n != "adam") {
            return Err(ConfigError::at(
                "solver.optimizer.optimizer",
                format!("unsupported local optimizer `{name}`; only adam is available"),
            ));
        }
        optimizer.steps = o.steps.unwrap_or(optimizer.steps);
        if let Some(stepsize) = o.stepsize {
            if !(stepsize.is_finite() && stepsize > 0.0) {
                return Err(ConfigError::at("solver.optimizer.stepsize", "must be positive"));
            }
            optimizer.stepsize = stepsize;
        }
    }
    Ok(VqaSettings {
        pqc: pqc_kind,
        angles,
        optimizer,
        evaluation,
        qubit_cap,
    })
}

fn annealing_settings(s: &SolverSection, kind: &str, seed: Option<u64>) -> Result<AnnealingSettings, ConfigError> {
    only_keys(
        s,
        "solver",
        kind,
        &["num_reads", "num_sweeps", "t_initial", "t_final", "hyper_optimizer", "params_inits", "evaluation"],
    )?;
    if s.params_inits.as_ref().is_some_and(|p| p.angles.is_some()) {
        return Err(ConfigError::at("solver.params_inits.angles", format!("not used by type `{kind}`")));
    }
    let mut a = AnnealingSettings {
        seed,
        ..AnnealingSettings::default()
    };
    if let Some(n) = s.num_reads {
        a.num_reads = positive(n, "solver.num_reads")?;
    }
    if let Some(n) = s.num_sweeps {
        a.num_sweeps = positive(n, "solver.num_sweeps")?;
    }
    for (key, value, slot) in [
        ("t_initial", s.t_initial, &mut a.t_initial),
        ("t_final", s.t_final, &mut a.t_final),
    ] {
        if let Some(t) = value {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::at(format!("solver.{key}"), "must be positive"));
            }
            *slot = t;
        }
    }
    if a.t_final > a.t_initial {
        return Err(ConfigError::at("solver.t_final", "must not exceed t_initial"));
    }
    Ok(a)
}

fn hyper_optimizer(
    h: &HyperOptimizerSection,
    dim: usize,
    evaluation: EvaluationSettings,
    seed: Option<u64>,
) -> Result<HyperOptimizer, ConfigError> {
    const P: &str = "solver.hyper_optimizer";
    let kind = kind_of(&h.kind, P)?;
    let pairs = required(&h.bounds, P, "bounds", kind)?;
    if pairs.len() != dim {
        return Err(ConfigError::at(
            format!("{P}.bounds"),
            format!("{} bounds given, the problem has {dim} penalty weights", pairs.len()),
        ));
    }
    let bounds = Bounds::new(pairs.iter().map(|[lo, hi]| (*lo, *hi)).collect())
        .map_err(|e| ConfigError::at(format!("{P}.bounds"), e.to_string()))?;
    let processes = positive(h.processes.unwrap_or(1), &format!("{P}.processes"))?;
    let search = match kind {
        "grid" => {
            only_keys(h, P, kind, &["steps", "bounds", "processes"])?;
            let steps = required(&h.steps, P, "steps", kind)?;
            if steps.len() != dim {
                return Err(ConfigError::at(
                    format!("{P}.steps"),
                    format!("{} steps given for {dim} bounds", steps.len()),
                ));
            }
            if steps.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(ConfigError::at(format!("{P}.steps"), "steps must be positive"));
            }
            HyperSearch::Grid(GridSearch {
                processes,
                ..GridSearch::new(steps)
            })
        }
        "random" => {
            only_keys(h, P, kind, &["samples", "bounds", "processes"])?;
            let samples = positive(required(&h.samples, P, "samples", kind)?, &format!("{P}.samples"))?;
            HyperSearch::Random(RandomSearch {
                processes,
                ..RandomSearch::new(samples, seed)
            })
        }
        "cem" => {
            only_keys(h, P, kind, &["epochs", "samples_per_epoch", "elite_frac", "bounds", "processes"])?;
            let mut cem = CrossEntropy {
                processes,
                seed,
                ..CrossEntropy::default()
            };
            if let Some(e) = h.epochs {
                cem.epochs = positive(e, &format!("{P}.epochs"))?;
            }
            if let Some(n) = h.samples_per_epoch {
                if n < 2 {
                    return Err(ConfigError::at(format!("{P}.samples_per_epoch"), "must be at least 2"));
                }
                cem.samples_per_epoch = n;
            }
            if let Some(f) = h.elite_frac {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(ConfigError::at(format!("{P}.elite_frac"), "must be in (0, 1]"));
                }
                cem.elite_frac = f;
            }
            HyperSearch::Cem(cem)
        }
        other => {
            return Err(ConfigError::at(
                format!("{P}.type"),
                format!("unknown hyper_optimizer type `{other}` (expected grid, random or cem)"),
            ));
        }
    };
    Ok(HyperOptimizer {
        search,
        bounds,
        evaluation,
    })
}

/// Builds the configured solver. Returns it with any deprecation warnings,
/// which are also logged.
pub fn solver_from_config(cfg: &ExperimentConfig) -> Result<(Solver, Vec<String>), ConfigError> {
    let problem = problem_from_config(&cfg.problem)?;
    let s = &cfg.solver;
    let mut warnings = Vec::new();
    let evaluation = evaluation_settings(&s.evaluation)?;
    let qubit_cap = s.qubit_cap.unwrap_or(DEFAULT_QUBIT_CAP);

    let kind = match kind_of(&s.kind, "solver")? {
        "vqa" => SolverKind::Vqa(vqa_settings(s, evaluation, qubit_cap)?),
        name @ ("annealing" | "advantage") => {
            if name == "advantage" {
                warnings.push(
                    "solver.type `advantage` is deprecated; running the local simulated annealer (`annealing`)".to_string(),
                );
            }
            SolverKind::Annealing(annealing_settings(s, name, cfg.seed)?)
        }
        "brute_force" => {
            only_keys(s, "solver", "brute_force", &["qubit_cap", "hyper_optimizer", "params_inits", "evaluation"])?;
            if s.params_inits.as_ref().is_some_and(|p| p.angles.is_some()) {
                return Err(ConfigError::at("solver.params_inits.angles", "not used by type `brute_force`"));
            }
            SolverKind::BruteForce { qubit_cap }
        }
        other => {
            return Err(ConfigError::UnsupportedSolver {
                path: "solver.type".into(),
                name: other.into(),
            });
        }
    };

    let dim = problem.group_count() + 1;
    let hyper_args = match s.params_inits.as_ref().and_then(|p| p.hyper_args.clone()) {
        Some(alphas) if alphas.len() != dim => {
            return Err(ConfigError::at(
                "solver.params_inits.hyper_args",
                format!("{} weights given, the problem has {dim} penalty groups", alphas.len()),
            ));
        }
        Some(alphas) => HyperArgs::new(alphas).map_err(|e| ConfigError::at("solver.params_inits.hyper_args", e.to_string()))?,
        None => HyperArgs::ones_for(&problem),
    };
    let hyper_optimizer = s
        .hyper_optimizer
        .as_ref()
        .map(|h| hyper_optimizer(h, dim, evaluation, cfg.seed))
        .transpose()?;

    for w in &warnings {
        warn!("{w}");
    }
    Ok((
        Solver {
            problem,
            kind,
            hyper_args,
            hyper_optimizer,
            seed: cfg.seed,
        },
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KNAPSACK: &str = "problem:
  type: knapsack
  max_weight: 2
  items_weights: [1, 1, 1]
  items_values: [2, 2, 1]
";

    fn doc(solver: &str) -> String {
        format!("{KNAPSACK}{solver}")
    }

    #[test]
    fn vqa_example() {
        let cfg = ExperimentConfig::parse(&doc("solver:
  type: vqa
  pqc:
    type: qaoa
    layers: 5
  optimizer:
    type: qml
  params_inits:
    angles: [[0.5, 0.5, 0.5, 0.5, 0.5], [1, 1, 1, 1, 1]]
    hyper_args: [1, 2.5, 2.5]
"))
        .unwrap();
        let (solver, warnings) = solver_from_config(&cfg).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(solver.hyper_args.as_slice(), [1.0, 2.5, 2.5]);
        let SolverKind::Vqa(v) = &solver.kind else { panic!("expected vqa") };
        assert_eq!(v.angles.layers(), 5);
        assert_eq!(v.pqc, PqcKind::Qaoa);
        assert_eq!(v.optimizer, Adam::default());
    }

    #[test]
    fn grid_example_with_deprecated_alias() {
        let cfg = ExperimentConfig::parse(&doc("solver:
  type: advantage
  num_reads: 100
  hyper_optimizer:
    type: grid
    steps: [0.1, 0.1, 0.1]
    bounds: [[1, 10], [1, 10], [1, 10]]
"))
        .unwrap();
        let (solver, warnings) = solver_from_config(&cfg).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("advantage"));
        let SolverKind::Annealing(a) = &solver.kind else { panic!("expected annealing") };
        assert_eq!(a.num_reads, 100);
        let h = solver.hyper_optimizer.unwrap();
        let HyperSearch::Grid(g) = h.search else { panic!("expected grid") };
        assert_eq!(g.steps, [0.1, 0.1, 0.1]);
        // hyper_args absent: every group starts at weight 1
        assert_eq!(solver.hyper_args.as_slice(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn cem_example() {
        let cfg = ExperimentConfig::parse(&doc("solver:
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
seed: 3
"))
        .unwrap();
        let (solver, _) = solver_from_config(&cfg).unwrap();
        let SolverKind::Vqa(v) = &solver.kind else { panic!("expected vqa") };
        assert_eq!(v.pqc, PqcKind::WfQaoa);
        assert_eq!((v.optimizer.steps, v.optimizer.stepsize), (50, 0.01));
        let HyperSearch::Cem(c) = solver.hyper_optimizer.unwrap().search else { panic!("expected cem") };
        assert_eq!((c.processes, c.samples_per_epoch, c.epochs, c.seed), (4, 200, 10, Some(3)));
    }

    #[test]
    fn missing_problem_type() {
        let cfg = ExperimentConfig::parse("problem:\n  max_weight: 2\nsolver:\n  type: brute_force\n").unwrap();
        let err = solver_from_config(&cfg).unwrap_err();
        assert_eq!(err.path(), "problem.type");
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = ExperimentConfig::parse(&doc("solver:\n  type: vqa\n  pqc:\n    type: qaoa\n    depth: 3\n")).unwrap_err();
        assert_eq!(err.path(), "solver.pqc.depth");
        assert!(err.to_string().contains("depth"), "{err}");
    }

    #[test]
    fn keys_of_another_type_are_rejected() {
        let cfg = ExperimentConfig::parse(&doc("solver:\n  type: brute_force\n  num_reads: 5\n")).unwrap();
        assert_eq!(solver_from_config(&cfg).unwrap_err().path(), "solver.num_reads");
        let cfg = ExperimentConfig::parse(&format!("{KNAPSACK}  edges: [[0, 1]]\nsolver:\n  type: brute_force\n")).unwrap();
        assert_eq!(solver_from_config(&cfg).unwrap_err().path(), "problem.edges");
    }

    #[test]
    fn layer_mismatch_and_bad_backend() {
        let cfg = ExperimentConfig::parse(&doc(
            "solver:\n  type: vqa\n  pqc: {type: qaoa, layers: 2}\n  params_inits:\n    angles: [[0.5], [1]]\n",
        ))
        .unwrap();
        assert_eq!(solver_from_config(&cfg).unwrap_err().path(), "solver.params_inits.angles");
        let cfg = ExperimentConfig::parse(&doc(
            "solver:\n  type: vqa\n  pqc: {type: qaoa, backend: lightning.qubit}\n  params_inits:\n    angles: [[0.5], [1]]\n",
        ))
        .unwrap();
        assert_eq!(solver_from_config(&cfg).unwrap_err().path(), "solver.pqc.backend");
    }

    #[test]
    fn unsupported_solver_and_bad_reads() {
        let cfg = ExperimentConfig::parse(&doc("solver:\n  type: gurobi\n")).unwrap();
        assert!(matches!(
            solver_from_config(&cfg),
            Err(ConfigError::UnsupportedSolver { .. })
        ));
        let cfg = ExperimentConfig::parse(&doc("solver:\n  type: annealing\n  num_reads: 0\n")).unwrap();
        assert_eq!(solver_from_config(&cfg).unwrap_err().path(), "solver.num_reads");
    }

    #[test]
    fn hyper_args_length_checked() {
        let cfg = ExperimentConfig::parse(&doc(
            "solver:\n  type: brute_force\n  params_inits:\n    hyper_args: [1, 2]\n",
        ))
        .unwrap();
        assert_eq!(solver_from_config(&cfg).unwrap_err().path(), "solver.params_inits.hyper_args");
    }

    #[test]
    fn custom_problem_with_unbalanced_constraint() {
        let cfg = ExperimentConfig::parse(
            "problem:
  type: custom
  objective: -x0 - 2*x1 - x2
  constraints:
    - {lhs: x0 + x1 + x2, op: '<=', rhs: 2, method: unbalanced, lambdas: [1, 3]}
    - {lhs: x0 + x2, op: '==', rhs: 1}
solver:
  type: brute_force
",
        )
        .unwrap();
        let (solver, _) = solver_from_config(&cfg).unwrap();
        let c = solver.problem.constraints();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].method, InequalityMethod::Unbalanced { lambda1: 1.0, lambda2: 3.0 });
        assert_eq!(solver.problem.binary_vars(), ["x0", "x1", "x2"]);
    }

    #[test]
    fn json_is_accepted_and_round_trips() {
        let cfg = ExperimentConfig::parse(&doc("solver:\n  type: annealing\n  num_reads: 10\nseed: 7\n")).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.digest(), again.digest());
        assert_eq!(ExperimentConfig::parse(&cfg.to_yaml()).unwrap(), cfg);
    }

    #[test]
    fn malformed_yaml_is_a_config_error() {
        assert!(ExperimentConfig::parse("problem: [unclosed\n").is_err());
    }
}
