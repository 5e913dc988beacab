use std::fs;
use std::path::PathBuf;

use clap::Args;
use lpc_core::data::Instance;
use lpc_core::metrics::{evaluate, mean_ci95};
use lpc_core::objective::evaluate_objective;
use lpc_core::regression::ridge_fit;
use lpc_core::solvers::{solve, tune_alpha};
use lpc_core::{Dataset, Method, SolveReport, SolverConfig};
use serde_json::{json, Value};

use crate::settings::Settings;
use crate::{Failure, SolverArgs};

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Instance JSON file.
    instance: PathBuf,
    /// oracle, global, lpcns-mip, lpcns-qpbo, greedy or clr.
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tune α around the inner method (lpcns-mip or lpcns-qpbo).
    #[arg(long)]
    tune_alpha: bool,
    /// Report file; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

pub fn run(a: &SolveArgs) -> Result<(), Failure> {
    let s = Settings::load(a.config.as_deref())?;
    let seed = s.seed(a.seed)?;
    let method: Option<Method> = s.value("method", a.method)?;
    let tune = s.value_or("tune_alpha", a.tune_alpha.then_some(true), false)?;
    let out: Option<PathBuf> = s.value("out", a.out.clone())?;
    let config = a.solver.resolve(&s, seed)?;
    s.reject_unknown()?;
    let method = method.ok_or_else(|| Failure::usage("missing --method (or `method` key)"))?;

    let inst = Instance::read(&a.instance)?;
    let ds = inst.dataset()?;
    let mut report_json;
    let report = if tune {
        let outcome = tune_alpha(&ds, &config, method)?;
        report_json = report_value(method, &outcome.report, &config);
        report_json["tuned_alphas"] = json!(outcome.alphas.as_slice());
        report_json["alpha_hops"] = outcome
            .hops
            .iter()
            .map(|h| json!({"alphas": h.alphas.as_slice(), "sizes": h.assignment.sizes(), "objective": h.objective}))
            .collect();
        outcome.report
    } else {
        let r = solve(method, &ds, &config)?;
        report_json = report_value(method, &r, &config);
        r
    };
    report_json["instance_hash"] = json!(inst.hash()?);
    report_json["metrics"] = metrics(&inst, &ds, &report, config.lambda);

    let summary = format!(
        "method {}  status {}  objective {}  wall {:.3}s",
        method, report.status, report.objective, report.wall_seconds
    );
    let text = serde_json::to_string_pretty(&report_json)? + "\n";
    match out {
        Some(path) => {
            fs::write(&path, text)?;
            println!("{summary}");
        }
        None => {
            eprintln!("{summary}");
            print!("{text}");
        }
    }
    Ok(())
}

pub fn report_value(method: Method, r: &SolveReport<f64>, config: &SolverConfig<f64>) -> Value {
    let mut v = json!({
        "method": method.as_str(),
        "status": r.status.as_str(),
        "objective": r.objective,
        "surrogate_objective": r.surrogate_objective,
        "wall_seconds": r.wall_seconds,
        "nodes_or_iters": r.nodes_or_iters,
        "seed": r.seed,
        "lambda": config.lambda,
        "assignment": r.assignment.labels(),
        "cluster_sizes": r.assignment.sizes(),
        "coefficients": r.coefficients.to_rows(),
    });
    if !r.restart_objectives.is_empty() {
        let ci = mean_ci95(&r.restart_objectives);
        v["restart_objectives"] = json!(r.restart_objectives);
        v["restart_mean"] = json!(ci.mean);
        v["restart_ci95_half_width"] = json!(ci.half_width);
    }
    v
}

/// Scores against the embedded reference partition, when there is one. The
/// objective gap is relative to the reference partition's own refit
/// objective, which is not necessarily optimal.
fn metrics(inst: &Instance, ds: &Dataset<f64>, r: &SolveReport<f64>, lambda: f64) -> Value {
    let labels = match inst.reference_assignment() {
        Ok(Some(l)) => l,
        Ok(None) => return Value::Null,
        Err(e) => return json!({"error": e.to_string()}),
    };
    let scored = (|| {
        let refit = ridge_fit(ds, &labels, lambda)?;
        let reference_objective = evaluate_objective(ds, &labels, &refit)?;
        let coefs = inst.reference_coefficient_set()?.unwrap_or(refit);
        let e = evaluate(&labels, &coefs, reference_objective, r)?;
        Ok::<_, lpc_core::LpcError>(json!({
            "reference_objective": reference_objective,
            "objective_gap": e.objective_gap,
            "mismatch": e.mismatch_fraction,
            "coefficient_distance": e.coefficient_distance,
            "alignment": e.alignment,
        }))
    })();
    scored.unwrap_or_else(|e| json!({"error": e.to_string()}))
}
