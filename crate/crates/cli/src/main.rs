//! `lpc`: generate instances, run solvers, ingest CSV data and run the
//! benchmark sweeps.
//!
//! Exit codes: 0 success (including budget exhaustion), 2 usage or config
//! error, 3 data error, 4 solver error.

mod bench;
mod gen;
mod ingest;
mod settings;
mod solve;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpc_core::{AlphaVector, ErrorCategory, LpcError, SolverConfig};

use settings::{List, Settings};

#[derive(Parser)]
#[command(name = "lpc", version, about = "Linear predictive clustering solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance (or the four-regime suite).
    Gen(gen::GenArgs),
    /// Solve an instance file with one method.
    Solve(solve::SolveArgs),
    /// Run an experiment sweep.
    Bench(bench::BenchArgs),
    /// Turn a CSV file into an instance.
    Ingest(ingest::IngestArgs),
    /// Shorthand for `bench --experiment bound_check`.
    BoundCheck(bench::BenchArgs),
}

/// A message plus the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<LpcError> for Failure {
    fn from(e: LpcError) -> Self {
        let code = match e.category() {
            ErrorCategory::Usage => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Solver => 4,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::data(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::data(e.to_string())
    }
}

/// Solver flags shared by `solve` and `bench`; each has a config key of the
/// same name with underscores.
#[derive(Args, Debug, Default, Clone)]
pub struct SolverArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Early-stop gap for the global search (0 certifies).
    #[arg(long)]
    rel_gap: Option<f64>,
    #[arg(long)]
    exact_n_cap: Option<usize>,
    #[arg(long)]
    exact_budget_nodes: Option<u64>,
    #[arg(long)]
    time_limit: Option<f64>,
    /// Comma-separated α values, one per cluster.
    #[arg(long)]
    alphas: Option<List<f64>>,
    #[arg(long)]
    alpha_floor: Option<f64>,
    #[arg(long)]
    max_alpha_hops: Option<usize>,
    /// Run restarts on all cores.
    #[arg(long)]
    parallel: bool,
}

impl SolverArgs {
    pub fn resolve(&self, s: &Settings, seed: u64) -> Result<SolverConfig<f64>, Failure> {
        let d = SolverConfig::<f64>::default();
        let alphas = match s.value("alphas", self.alphas.clone())? {
            Some(List(v)) => Some(AlphaVector::new(v)?),
            None => None,
        };
        let config = SolverConfig {
            lambda: s.value_or("lambda", self.lambda, d.lambda)?,
            alphas,
            exact_budget_nodes: s.value_or("exact_budget_nodes", self.exact_budget_nodes, d.exact_budget_nodes)?,
            exact_n_cap: s.value_or("exact_n_cap", self.exact_n_cap, d.exact_n_cap)?,
            restarts: s.value_or("restarts", self.restarts, d.restarts)?,
            max_iters: s.value_or("max_iters", self.max_iters, d.max_iters)?,
            rel_gap: s.value_or("rel_gap", self.rel_gap, d.rel_gap)?,
            seed,
            time_limit_seconds: s.value_or("time_limit", self.time_limit, d.time_limit_seconds)?,
            alpha_floor: s.value("alpha_floor", self.alpha_floor)?,
            max_alpha_hops: s.value_or("max_alpha_hops", self.max_alpha_hops, d.max_alpha_hops)?,
            parallel: s.value_or("parallel", self.parallel.then_some(true), false)?,
            projector_cap: d.projector_cap,
        };
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen::run(&a),
        Command::Solve(a) => solve::run(&a),
        Command::Bench(a) => bench::run(&a, None),
        Command::Ingest(a) => ingest::run(&a),
        Command::BoundCheck(a) => bench::run(&a, Some(bench::Experiment::BoundCheck)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
