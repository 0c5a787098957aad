use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use quboflow::config::{solver_from_config, ExperimentConfig};
use quboflow::results::{add_evaluation_to_results, sort_solver_results, EvaluatedRecord, SolverResults};
use quboflow::simulator::DEFAULT_QUBIT_CAP;
use quboflow::solvers::{Solver, SolverKind};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "quboflow", version, about = "Solve constrained binary optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment.
    Solve(RunArgs),
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the configured problem by exhaustive enumeration.
    BruteForce(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's `output` key, then stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep only the K most probable records.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    top: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

fn load(path: &Path) -> Result<(ExperimentConfig, String), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok((cfg, text))
}

fn build(cfg: &ExperimentConfig) -> Result<Solver, Failure> {
    let (solver, warnings) = solver_from_config(cfg).map_err(|e| Failure::Config(e.to_string()))?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(solver)
}

fn solver_name(kind: &SolverKind) -> &'static str {
    match kind {
        SolverKind::Vqa(_) => "vqa",
        SolverKind::Annealing(_) => "annealing",
        SolverKind::BruteForce { .. } => "brute_force",
    }
}

fn validate(config: &Path) -> Result<(), Failure> {
    let (cfg, _) = load(config)?;
    let solver = build(&cfg)?;
    println!(
        "ok: {} problem, {} variables, {} solver{}",
        solver.problem.name(),
        solver.problem.binary_vars().len(),
        solver_name(&solver.kind),
        if solver.hyper_optimizer.is_some() { " with hyperoptimizer" } else { "" }
    );
    Ok(())
}

fn run(args: &RunArgs, brute_force: bool) -> Result<(), Failure> {
    let (mut cfg, _) = load(&args.config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let mut solver = build(&cfg)?;
    if brute_force {
        solver.kind = SolverKind::BruteForce {
            qubit_cap: cfg.solver.qubit_cap.unwrap_or(DEFAULT_QUBIT_CAP),
        };
    }
    info!("running {} solver", solver_name(&solver.kind));
    let results = solver.solve().map_err(|e| Failure::Runtime(e.to_string()))?;

    let limit = args.top.map_or(results.records.len(), |k| k as usize);
    let sorted = sort_solver_results(&results.records, limit).map_err(|e| Failure::Runtime(e.to_string()))?;
    let penalty = cfg.solver.evaluation.as_ref().and_then(|e| e.penalty).unwrap_or(0.0);
    let problem = &solver.problem;
    let evaluated = add_evaluation_to_results(&sorted, |bits, p| problem.score(bits, p), penalty);

    let body = match args.format {
        Format::Json => {
            let report = json_report(&results, &evaluated, &cfg);
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        Format::Csv => csv_report(&results.var_order, &evaluated).map_err(|e| Failure::Runtime(e.to_string()))?,
    };
    match args.output.clone().or_else(|| cfg.output.clone().map(PathBuf::from)) {
        Some(path) => fs::write(&path, body)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn json_report(results: &SolverResults, records: &[EvaluatedRecord], cfg: &ExperimentConfig) -> Value {
    let rows: Vec<Value> = records
        .iter()
        .map(|r| {
            let mut row: Map<String, Value> = results
                .var_order
                .iter()
                .zip(&r.bits)
                .map(|(v, b)| (v.clone(), json!(b)))
                .collect();
            row.insert("probability".into(), json!(r.probability));
            row.insert("evaluation".into(), json!(r.evaluation));
            Value::Object(row)
        })
        .collect();
    json!({
        "records": rows,
        "history": results.history,
        "params": results.params,
        "seed": cfg.seed,
        "config_digest": cfg.digest(),
    })
}

fn csv_report(var_order: &[String], records: &[EvaluatedRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = var_order.iter().map(String::as_str).collect();
    header.extend(["probability", "evaluation"]);
    w.write_record(&header)?;
    for r in records {
        let mut row: Vec<String> = r.bits.iter().map(u8::to_string).collect();
        row.push(r.probability.to_string());
        row.push(r.evaluation.to_string());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => run(args, false),
        Command::Validate { config } => validate(config),
        Command::BruteForce(args) => run(args, true),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(msg) | Failure::Runtime(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
