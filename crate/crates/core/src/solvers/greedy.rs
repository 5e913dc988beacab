//! Alternating refit / reassign baseline.

use std::time::Instant;

use ndarray::Array1;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::types::{Assignment, Dataset, SolveReport, SolveStatus};

use super::{finalize, random_labels, refit_objective, run_restarts, Draft, SolverConfig};
use crate::regression;

/// One descent from a starting labeling.
#[derive(Debug, Clone)]
pub struct GreedyRun<T: Scalar = f64> {
    pub labels: Vec<usize>,
    /// Exact objective after every refit; non-increasing.
    pub trace: Vec<T>,
    pub iterations: usize,
    /// True when the last reassignment changed nothing.
    pub converged: bool,
}

impl<T: Scalar> GreedyRun<T> {
    pub fn objective(&self) -> T {
        *self.trace.last().expect("at least one refit")
    }
}

/// Refits every cluster, then moves each sample to the cluster with the
/// smallest squared residual (lowest index on ties), until a fixpoint or
/// `max_iters` refits.
pub fn greedy_descent<T: Scalar>(ds: &Dataset<T>, start: &Assignment, lambda: T, max_iters: usize) -> Result<GreedyRun<T>> {
    regression::check_assignment(ds, start)?;
    let k = ds.k();
    let mut labels = start.labels().to_vec();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut pending = false;
    for _ in 0..max_iters.max(1) {
        let asg = Assignment::from_labels_unchecked(labels.clone(), k);
        let coefs = regression::refit_lenient(ds, &asg, lambda)?;
        trace.push(crate::objective::evaluate_objective(ds, &asg, &coefs)?);
        let next = reassign(ds, &coefs.coefficients);
        if next == labels {
            converged = true;
            pending = false;
            break;
        }
        labels = next;
        pending = true;
    }
    if pending {
        trace.push(refit_objective(ds, &labels, lambda)?);
    }
    let iterations = trace.len();
    Ok(GreedyRun {
        labels,
        trace,
        iterations,
        converged,
    })
}

fn reassign<T: Scalar>(ds: &Dataset<T>, coefs: &[Array1<T>]) -> Vec<usize> {
    (0..ds.n())
        .map(|i| {
            let x = ds.row(i);
            let y = ds.target(i);
            let mut best = 0;
            let mut best_r = T::infinity();
            for (c, w) in coefs.iter().enumerate() {
                let r = y - x.dot(w);
                let r2 = r * r;
                if r2 < best_r {
                    best_r = r2;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Best of `restarts` descents from uniformly random labelings.
pub fn solve_greedy<T: Scalar>(ds: &Dataset<T>, config: &SolverConfig<T>) -> Result<SolveReport<T>> {
    config.validate()?;
    let started = Instant::now();
    let runs = run_restarts(config.restarts, config.parallel, |r| {
        let start = random_labels(&mut config.restart_rng(r), ds.n(), ds.k());
        greedy_descent(ds, &Assignment::from_labels_unchecked(start, ds.k()), config.lambda, config.max_iters)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.objective() < runs[best].objective() {
            best = r;
        }
    }
    let iters = runs.iter().map(|r| r.iterations as u64).sum();
    let mut draft = Draft::new(runs[best].labels.clone(), SolveStatus::Heuristic, iters);
    draft.restart_objectives = runs.iter().map(GreedyRun::objective).collect();
    draft.restart_traces = runs.into_iter().map(|r| r.trace).collect();
    finalize(ds, config, draft, started)
}
