//! Experiment sweeps.
//!
//! Every run writes into the output directory:
//!
//! - `results.csv`: one row per (sweep point, trial, method), deterministic
//!   for a fixed seed in single-threaded mode;
//! - `summary.json`: mean and 95% CI per (method, sweep point);
//! - `*.dat`: whitespace-separated plot data;
//! - `timings.csv` and `metadata.json`: wall times and timestamps, which are
//!   kept out of the files above so reruns compare byte for byte.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Args;
use lpc_core::data::{
    dimension_coefficients, generate, ingest_csv, PreprocessSpec, Regime, SyntheticSpec, REGIME_SUITE_N,
    REGIME_SUITE_NOISE,
};
use lpc_core::metrics::{evaluate, mean_ci95, MeanCi};
use lpc_core::objective::{approximation_excess, error_bound, separability};
use lpc_core::regression::build_cache;
use lpc_core::solvers::solve;
use lpc_core::{AlphaVector, Assignment, CoefficientSet, Dataset, LpcError, Method, SolveReport, SolveStatus, SolverConfig};
use serde_json::{json, Value};

use crate::settings::{List, Settings};
use crate::{Failure, SolverArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Rq1Tradeoff,
    Rq2Noise,
    Rq2Dimension,
    Rq2Outliers,
    Rq3Real,
    Table1Regimes,
    BoundCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Rq1Tradeoff,
        Experiment::Rq2Noise,
        Experiment::Rq2Dimension,
        Experiment::Rq2Outliers,
        Experiment::Rq3Real,
        Experiment::Table1Regimes,
        Experiment::BoundCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Rq1Tradeoff => "rq1_tradeoff",
            Experiment::Rq2Noise => "rq2_noise",
            Experiment::Rq2Dimension => "rq2_dimension",
            Experiment::Rq2Outliers => "rq2_outliers",
            Experiment::Rq3Real => "rq3_real",
            Experiment::Table1Regimes => "table1_regimes",
            Experiment::BoundCheck => "bound_check",
        }
    }

    /// What the sweep values mean.
    fn sweep_name(self) -> &'static str {
        match self {
            Experiment::Rq1Tradeoff => "n",
            Experiment::Rq2Noise => "noise_sigma",
            Experiment::Rq2Dimension => "d",
            Experiment::Rq2Outliers => "outlier_fraction",
            Experiment::Rq3Real => "sample_cap",
            Experiment::Table1Regimes => "regime",
            Experiment::BoundCheck => "lambda",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|e| e.as_str()).collect();
            format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<Experiment>,
    /// Sweep values, comma separated (meaning depends on the experiment).
    #[arg(long)]
    sweep: Option<List<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Solver roster, comma separated.
    #[arg(long)]
    methods: Option<List<Method>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest N for which the reference optimum is certified by the global
    /// search; above it the best objective found is used.
    #[arg(long)]
    certify_n_cap: Option<usize>,
    /// CSV source for rq3_real.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

struct Plan {
    experiment: Experiment,
    sweep: Vec<f64>,
    trials: usize,
    roster: Vec<Method>,
    n: usize,
    noise: f64,
    seed: u64,
    certify_n_cap: usize,
    solver: SolverConfig<f64>,
    ingest: Option<(PathBuf, PreprocessSpec)>,
}

const STANDARD_ROSTER: [Method; 5] = [Method::Global, Method::LpcnsMip, Method::LpcnsQpbo, Method::Greedy, Method::Clr];
const REAL_ROSTER: [Method; 4] = [Method::LpcnsMip, Method::LpcnsQpbo, Method::Greedy, Method::Clr];

/// Default (sweep, trials, n, noise) per experiment.
fn defaults(e: Experiment) -> (Vec<f64>, usize, usize, f64) {
    match e {
        Experiment::Rq1Tradeoff => (vec![10.0, 14.0, 18.0], 5, 0, 1.5),
        Experiment::Rq2Noise => (vec![0.5, 1.5, 2.5, 3.5], 10, 20, 0.0),
        Experiment::Rq2Dimension => (vec![1.0, 2.0, 3.0, 4.0], 10, 20, 1.0),
        Experiment::Rq2Outliers => (vec![0.0, 0.05, 0.1, 0.2], 10, 20, 1.0),
        Experiment::Rq3Real => (vec![600.0], 5, 0, 0.0),
        Experiment::Table1Regimes => (vec![], 20, REGIME_SUITE_N, REGIME_SUITE_NOISE),
        Experiment::BoundCheck => (vec![1.0], 100, 20, 1.0),
    }
}

fn plan(a: &BenchArgs, s: &Settings, forced: Option<Experiment>) -> Result<(Plan, PathBuf), Failure> {
    let experiment = match forced {
        Some(e) => {
            if let Some(other) = s.value::<Experiment>("experiment", a.experiment)? {
                if other != e {
                    return Err(Failure::usage(format!("bound-check cannot run experiment `{other}`")));
                }
            }
            e
        }
        None => s
            .value("experiment", a.experiment)?
            .ok_or_else(|| Failure::usage("missing --experiment (or `experiment` key)"))?,
    };
    let (sweep0, trials0, n0, noise0) = defaults(experiment);
    let sweep: Option<List<f64>> = s.value("sweep", a.sweep.clone())?;
    let trials = s.value_or("trials", a.trials, trials0)?;
    let methods: Option<List<Method>> = s.value("methods", a.methods.clone())?;
    let n = s.value_or("n", a.n, n0)?;
    let noise = s.value_or("noise", a.noise, noise0)?;
    let seed = s.seed(a.seed)?;
    let certify_n_cap = s.value_or("certify_n_cap", a.certify_n_cap, 24)?;
    let out: Option<PathBuf> = s.value("out", a.out.clone())?;
    let csv: Option<PathBuf> = s.value("csv", a.csv.clone())?;
    let target: Option<String> = s.value("target", a.target.clone())?;
    let split: Option<String> = s.value("split", a.split.clone())?;
    let solver = a.solver.resolve(s, seed)?;
    s.reject_unknown()?;

    if trials == 0 {
        return Err(Failure::usage("`trials` must be at least 1"));
    }
    if experiment == Experiment::Table1Regimes && sweep.is_some() {
        return Err(Failure::usage("table1_regimes sweeps the four regimes and takes no `sweep`"));
    }
    let mut sweep = sweep.map_or(sweep0, |l| l.0);
    if sweep.iter().any(|v| !v.is_finite()) {
        return Err(Failure::usage("`sweep` values must be finite"));
    }
    sweep.sort_by(f64::total_cmp);
    sweep.dedup();
    if matches!(experiment, Experiment::Rq1Tradeoff | Experiment::Rq2Dimension | Experiment::Rq3Real)
        && sweep.iter().any(|&v| v < 1.0 || v.fract() != 0.0)
    {
        return Err(Failure::usage(format!(
            "`sweep` values for {experiment} are counts and must be positive integers"
        )));
    }
    let roster = match methods {
        Some(List(m)) => m,
        None if experiment == Experiment::Rq3Real => REAL_ROSTER.to_vec(),
        None => STANDARD_ROSTER.to_vec(),
    };
    let ingest = if experiment == Experiment::Rq3Real {
        let csv = csv.ok_or_else(|| Failure::usage("rq3_real needs --csv (or `csv` key)"))?;
        let spec = PreprocessSpec::new(
            target.ok_or_else(|| Failure::usage("rq3_real needs --target (or `target` key)"))?,
            split.ok_or_else(|| Failure::usage("rq3_real needs --split (or `split` key)"))?,
        );
        spec.validate()?;
        Some((csv, spec))
    } else {
        None
    };
    let out = out.ok_or_else(|| Failure::usage("missing --out (or `out` key)"))?;
    Ok((
        Plan {
            experiment,
            sweep,
            trials,
            roster,
            n,
            noise,
            seed,
            certify_n_cap,
            solver,
            ingest,
        },
        out,
    ))
}

pub fn run(a: &BenchArgs, forced: Option<Experiment>) -> Result<(), Failure> {
    let s = Settings::load(a.config.as_deref())?;
    let (plan, out) = plan(a, &s, forced)?;
    fs::create_dir_all(&out)?;
    let started_unix = unix_now();
    let started = Instant::now();
    let timing = match plan.experiment {
        Experiment::Table1Regimes => run_table1(&plan, &out)?,
        Experiment::BoundCheck => run_bound_check(&plan, &out)?,
        _ => run_standard(&plan, &out)?,
    };
    let meta = json!({
        "experiment": plan.experiment.as_str(),
        "started_unix": started_unix,
        "finished_unix": unix_now(),
        "total_wall_seconds": started.elapsed().as_secs_f64(),
        "mean_wall_seconds": timing,
    });
    write_json(&out.join("metadata.json"), &meta)?;
    println!("{} written to {}", plan.experiment, out.display());
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn ci_value(c: MeanCi) -> Value {
    json!({"mean": c.mean, "ci95_half_width": c.half_width, "count": c.count})
}

/// Per-cell seed: distinct for every (sweep point, trial).
fn cell_seed(base: u64, point: usize, trial: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add((point * 10_000 + trial) as u64)
}

fn num(v: f64) -> String {
    format!("{v}")
}

struct Truth {
    dataset: Dataset<f64>,
    labels: Assignment,
    coefficients: CoefficientSet<f64>,
}

fn make_instance(p: &Plan, value: f64, seed: u64) -> Result<Truth, LpcError> {
    let spec = match p.experiment {
        Experiment::Rq1Tradeoff => SyntheticSpec::sd1(value as usize, p.noise, seed),
        Experiment::Rq2Noise => SyntheticSpec::sd1(p.n, value, seed),
        Experiment::Rq2Dimension => SyntheticSpec::new(p.n, dimension_coefficients(2, value as usize)?, p.noise, seed),
        Experiment::Rq2Outliers => SyntheticSpec {
            outlier_fraction: value,
            ..SyntheticSpec::sd1(p.n, p.noise, seed)
        },
        Experiment::Rq3Real => {
            let (path, base) = p.ingest.as_ref().expect("rq3_real plan carries an ingest spec");
            let spec = PreprocessSpec {
                sample_cap: value as usize,
                seed,
                ..base.clone()
            };
            let ing = ingest_csv(path, &spec)?;
            return Ok(Truth {
                dataset: ing.dataset,
                labels: ing.labels,
                coefficients: ing.coefficients,
            });
        }
        Experiment::Table1Regimes | Experiment::BoundCheck => unreachable!("not a roster experiment"),
    };
    spec.validate()?;
    let g = generate(&spec)?;
    Ok(Truth {
        dataset: g.dataset,
        labels: g.labels,
        coefficients: g.coefficients,
    })
}

/// Certified optimum when the global search closes, else `None`.
fn certify(ds: &Dataset<f64>, config: &SolverConfig<f64>, cap: usize) -> Option<SolveReport<f64>> {
    if ds.n() > cap {
        return None;
    }
    let cfg = SolverConfig { rel_gap: 0.0, ..config.clone() };
    solve(Method::Global, ds, &cfg).ok()
}

struct Reference {
    kind: &'static str,
    objective: f64,
}

fn reference(
    ds: &Dataset<f64>,
    config: &SolverConfig<f64>,
    cap: usize,
    roster: &[(Method, Result<SolveReport<f64>, String>)],
) -> Option<Reference> {
    let reusable = roster.iter().find_map(|(m, r)| match r {
        Ok(r) if *m == Method::Global && config.rel_gap == 0.0 && r.status == SolveStatus::Exact => Some(r.objective),
        _ => None,
    });
    let attempt = if reusable.is_some() { None } else { certify(ds, config, cap) };
    if let Some(objective) = reusable {
        return Some(Reference { kind: "certified", objective });
    }
    if let Some(r) = &attempt {
        if r.status == SolveStatus::Exact {
            return Some(Reference { kind: "certified", objective: r.objective });
        }
    }
    roster
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok().map(|r| r.objective))
        .chain(attempt.map(|r| r.objective))
        .min_by(f64::total_cmp)
        .map(|objective| Reference { kind: "best-known", objective })
}

struct Scored {
    objective: f64,
    gap: f64,
    mismatch: f64,
    coefficient_distance: f64,
    status: SolveStatus,
    wall: f64,
}

struct Row {
    method: Method,
    point: usize,
    trial: usize,
    seed: u64,
    n: Option<usize>,
    reference: Option<Reference>,
    outcome: Result<Scored, String>,
}

fn run_standard(p: &Plan, out: &Path) -> Result<Value, Failure> {
    let mut rows = Vec::new();
    for (pi, &value) in p.sweep.iter().enumerate() {
        eprintln!("{} {} = {}", p.experiment, p.experiment.sweep_name(), value);
        for trial in 0..p.trials {
            let seed = cell_seed(p.seed, pi, trial);
            let truth = match make_instance(p, value, seed) {
                Ok(t) => t,
                Err(e) => {
                    for &method in &p.roster {
                        rows.push(Row {
                            method,
                            point: pi,
                            trial,
                            seed,
                            n: None,
                            reference: None,
                            outcome: Err(format!("instance: {e}")),
                        });
                    }
                    continue;
                }
            };
            let ds = &truth.dataset;
            let config = SolverConfig { seed, ..p.solver.clone() };
            let results: Vec<(Method, Result<SolveReport<f64>, String>)> = p
                .roster
                .iter()
                .map(|&m| (m, solve(m, ds, &config).map_err(|e| e.to_string())))
                .collect();
            let reference = reference(ds, &config, p.certify_n_cap, &results);
            for (method, r) in results {
                let outcome = r.and_then(|r| {
                    let ref_obj = reference.as_ref().map_or(f64::NAN, |x| x.objective);
                    let e = evaluate(&truth.labels, &truth.coefficients, ref_obj, &r).map_err(|e| e.to_string())?;
                    Ok(Scored {
                        objective: r.objective,
                        gap: e.objective_gap,
                        mismatch: e.mismatch_fraction,
                        coefficient_distance: e.coefficient_distance,
                        status: r.status,
                        wall: r.wall_seconds,
                    })
                });
                rows.push(Row {
                    method,
                    point: pi,
                    trial,
                    seed,
                    n: Some(ds.n()),
                    reference: reference.as_ref().map(|r| Reference { kind: r.kind, objective: r.objective }),
                    outcome,
                });
            }
        }
    }
    // Cells are produced in (point, trial, roster) order; the files list
    // them by (method, point, trial).
    rows.sort_by_key(|r| (p.roster.iter().position(|&m| m == r.method), r.point, r.trial));
    write_standard(p, out, &rows)
}

fn write_standard(p: &Plan, out: &Path, rows: &[Row]) -> Result<Value, Failure> {
    let mut w = csv::Writer::from_path(out.join("results.csv"))?;
    w.write_record([
        "method",
        "sweep_value",
        "trial",
        "instance_seed",
        "n",
        "reference_kind",
        "reference_objective",
        "objective",
        "objective_gap",
        "mismatch",
        "coefficient_distance",
        "status",
        "error",
    ])?;
    let mut t = csv::Writer::from_path(out.join("timings.csv"))?;
    t.write_record(["method", "sweep_value", "trial", "wall_seconds"])?;
    for r in rows {
        let value = num(p.sweep[r.point]);
        let (kind, ref_obj) = r.reference.as_ref().map_or(("none", String::new()), |x| (x.kind, num(x.objective)));
        let n = r.n.map_or(String::new(), |n| n.to_string());
        match &r.outcome {
            Ok(s) => {
                w.write_record([
                    r.method.as_str(),
                    &value,
                    &r.trial.to_string(),
                    &r.seed.to_string(),
                    &n,
                    kind,
                    &ref_obj,
                    &num(s.objective),
                    &num(s.gap),
                    &num(s.mismatch),
                    &num(s.coefficient_distance),
                    s.status.as_str(),
                    "",
                ])?;
                t.write_record([r.method.as_str(), &value, &r.trial.to_string(), &num(s.wall)])?;
            }
            Err(e) => {
                w.write_record([
                    r.method.as_str(),
                    &value,
                    &r.trial.to_string(),
                    &r.seed.to_string(),
                    &n,
                    kind,
                    &ref_obj,
                    "",
                    "",
                    "",
                    "",
                    "error",
                    e,
                ])?;
            }
        }
    }
    w.flush()?;
    t.flush()?;

    let mut points = Vec::new();
    let mut timing = Vec::new();
    for &method in &p.roster {
        let mut dat = [String::new(), String::new(), String::new()];
        for (d, metric) in dat.iter_mut().zip(["objective_gap", "mismatch", "coefficient_distance"]) {
            *d = format!("# {} {metric}_mean {metric}_ci95\n", p.experiment.sweep_name());
        }
        for (pi, &value) in p.sweep.iter().enumerate() {
            let cell: Vec<&Row> = rows.iter().filter(|r| r.method == method && r.point == pi).collect();
            let ok: Vec<&Scored> = cell.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let certified = cell.iter().filter(|r| r.reference.as_ref().is_some_and(|x| x.kind == "certified")).count();
            let stats = [
                mean_ci95(&ok.iter().map(|s| s.gap).collect::<Vec<_>>()),
                mean_ci95(&ok.iter().map(|s| s.mismatch).collect::<Vec<_>>()),
                mean_ci95(&ok.iter().map(|s| s.coefficient_distance).collect::<Vec<_>>()),
            ];
            for (d, c) in dat.iter_mut().zip(stats) {
                d.push_str(&format!("{} {} {}\n", num(value), num(c.mean), num(c.half_width)));
            }
            points.push(json!({
                "method": method.as_str(),
                "sweep_value": value,
                "completed": ok.len(),
                "failed": cell.len() - ok.len(),
                "certified_references": certified,
                "objective_gap": ci_value(stats[0]),
                "mismatch": ci_value(stats[1]),
                "coefficient_distance": ci_value(stats[2]),
            }));
            timing.push(json!({
                "method": method.as_str(),
                "sweep_value": value,
                "wall_seconds": ci_value(mean_ci95(&ok.iter().map(|s| s.wall).collect::<Vec<_>>())),
            }));
        }
        for (d, metric) in dat.iter().zip(["objective_gap", "mismatch", "coefficient_distance"]) {
            fs::write(out.join(format!("{metric}_{}.dat", method.as_str())), d)?;
        }
    }
    let summary = json!({
        "experiment": p.experiment.as_str(),
        "sweep_name": p.experiment.sweep_name(),
        "sweep": p.sweep,
        "trials": p.trials,
        "roster": p.roster.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
        "seed": p.seed,
        "n": p.n,
        "noise": p.noise,
        "lambda": p.solver.lambda,
        "certify_n_cap": p.certify_n_cap,
        "points": points,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(json!(timing))
}

fn run_table1(p: &Plan, out: &Path) -> Result<Value, Failure> {
    let alphas = AlphaVector::uniform(2);
    let mut w = csv::Writer::from_path(out.join("results.csv"))?;
    w.write_record([
        "regime",
        "trial",
        "instance_seed",
        "reference_kind",
        "reference_objective",
        "e_sep",
        "e_sep_normalized",
        "e_obj_wstar",
        "e_obj_clr",
        "error",
    ])?;
    let mut per_regime = vec![[Vec::new(), Vec::new(), Vec::new(), Vec::new()]; Regime::ALL.len()];
    for (ri, regime) in Regime::ALL.into_iter().enumerate() {
        eprintln!("table1_regimes regime = {}", regime.as_str());
        for trial in 0..p.trials {
            // The same seed across regimes, as in a regime suite.
            let seed = cell_seed(p.seed, 0, trial);
            let config = SolverConfig { seed, ..p.solver.clone() };
            let cell = (|| -> Result<(Reference, [f64; 4]), LpcError> {
                let spec = SyntheticSpec::table1(p.n, p.noise, regime, seed);
                spec.validate()?;
                let g = generate(&spec)?;
                let ds = &g.dataset;
                let e_sep = separability(ds, &g.labels, &alphas, false)?;
                let e_sep_n = separability(ds, &g.labels, &alphas, true)?;
                let wstar = solve(Method::LpcnsMip, ds, &config)?;
                let clr = solve(Method::Clr, ds, &config)?;
                let rows = [(Method::LpcnsMip, Ok::<_, String>(wstar.clone())), (Method::Clr, Ok(clr.clone()))];
                let reference = reference(ds, &config, p.certify_n_cap, &rows).expect("two successful runs");
                let surrogate = wstar.surrogate_objective.unwrap_or(wstar.objective);
                Ok((
                    Reference { kind: reference.kind, objective: reference.objective },
                    [e_sep, e_sep_n, surrogate - reference.objective, clr.objective - reference.objective],
                ))
            })();
            match cell {
                Ok((r, vals)) => {
                    for (acc, v) in per_regime[ri].iter_mut().zip(vals) {
                        acc.push(v);
                    }
                    w.write_record([
                        regime.as_str().to_string(),
                        trial.to_string(),
                        seed.to_string(),
                        r.kind.to_string(),
                        num(r.objective),
                        num(vals[0]),
                        num(vals[1]),
                        num(vals[2]),
                        num(vals[3]),
                        String::new(),
                    ])?;
                }
                Err(e) => {
                    let mut rec = vec![regime.as_str().to_string(), trial.to_string(), seed.to_string()];
                    rec.extend(std::iter::repeat_n(String::new(), 6));
                    rec.push(e.to_string());
                    w.write_record(&rec)?;
                }
            }
        }
    }
    w.flush()?;
    let mut dat = String::from("# index regime e_sep e_sep_normalized e_obj_wstar e_obj_clr\n");
    let mut points = Vec::new();
    for (ri, regime) in Regime::ALL.into_iter().enumerate() {
        let stats: Vec<MeanCi> = per_regime[ri].iter().map(|v| mean_ci95(v)).collect();
        dat.push_str(&format!(
            "{ri} {} {} {} {} {}\n",
            regime.as_str(),
            num(stats[0].mean),
            num(stats[1].mean),
            num(stats[2].mean),
            num(stats[3].mean)
        ));
        points.push(json!({
            "regime": regime.as_str(),
            "e_sep": ci_value(stats[0]),
            "e_sep_normalized": ci_value(stats[1]),
            "e_obj_wstar": ci_value(stats[2]),
            "e_obj_clr": ci_value(stats[3]),
        }));
    }
    fs::write(out.join("table1.dat"), dat)?;
    let summary = json!({
        "experiment": p.experiment.as_str(),
        "trials": p.trials,
        "seed": p.seed,
        "n": p.n,
        "noise": p.noise,
        "lambda": p.solver.lambda,
        "regimes": points,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(Value::Null)
}

fn run_bound_check(p: &Plan, out: &Path) -> Result<Value, Failure> {
    let mut w = csv::Writer::from_path(out.join("results.csv"))?;
    w.write_record(["lambda", "trial", "instance_seed", "n", "e_obj", "bound", "holds", "error"])?;
    let mut dat = String::from("# lambda e_obj bound\n");
    let mut points = Vec::new();
    for (pi, &lambda) in p.sweep.iter().enumerate() {
        eprintln!("bound_check lambda = {lambda}");
        let (mut holds, mut failed, mut tightest) = (0usize, 0usize, f64::INFINITY);
        let (mut excesses, mut bounds) = (Vec::new(), Vec::new());
        for trial in 0..p.trials {
            let seed = cell_seed(p.seed, pi, trial);
            let cell = (|| -> Result<(usize, f64, f64), LpcError> {
                let spec = SyntheticSpec::sd1(p.n, p.noise, seed);
                spec.validate()?;
                let g = generate(&spec)?;
                let alphas = AlphaVector::uniform(g.dataset.k());
                let cache = build_cache(&g.dataset, lambda, &alphas)?;
                let excess: f64 = approximation_excess(&g.dataset, &g.labels, &cache)?.iter().sum();
                let bound = error_bound(&g.dataset, &g.labels, &alphas, lambda)?.total_bound;
                Ok((g.dataset.n(), excess, bound))
            })();
            match cell {
                Ok((n, excess, bound)) => {
                    let ok = excess <= bound * (1.0 + 1e-12) + 1e-9;
                    holds += usize::from(ok);
                    if excess > 1e-9 {
                        tightest = tightest.min(bound / excess);
                    }
                    excesses.push(excess);
                    bounds.push(bound);
                    dat.push_str(&format!("{} {} {}\n", num(lambda), num(excess), num(bound)));
                    w.write_record([
                        num(lambda),
                        trial.to_string(),
                        seed.to_string(),
                        n.to_string(),
                        num(excess),
                        num(bound),
                        ok.to_string(),
                        String::new(),
                    ])?;
                }
                Err(e) => {
                    failed += 1;
                    w.write_record([
                        num(lambda),
                        trial.to_string(),
                        seed.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        e.to_string(),
                    ])?;
                }
            }
        }
        points.push(json!({
            "lambda": lambda,
            "trials": p.trials,
            "holds": holds,
            "failed": failed,
            "smallest_bound_to_excess_ratio": if tightest.is_finite() { json!(tightest) } else { Value::Null },
            "e_obj": ci_value(mean_ci95(&excesses)),
            "bound": ci_value(mean_ci95(&bounds)),
        }));
    }
    w.flush()?;
    fs::write(out.join("bound_check.dat"), dat)?;
    let summary = json!({
        "experiment": p.experiment.as_str(),
        "trials": p.trials,
        "seed": p.seed,
        "n": p.n,
        "noise": p.noise,
        "points": points,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(Value::Null)
}
