//! Assignment optimizers.
//!
//! | method | optimizes | certificate |
//! |---|---|---|
//! | [`solve_oracle`] | exact objective, full enumeration | always |
//! | [`solve_global_bnb`] | exact objective, branch-and-bound | when the tree closes |
//! | [`solve_lpcns_mip`] | approximated (`w*`) objective | enumeration at small `N` |
//! | [`solve_qpbo`] | quadratic gain form | branch-and-bound at small `N` |
//! | [`solve_greedy`] | alternating refit / reassign | never |
//! | [`solve_clr_baseline`] | k-means on features, then refit | never |
//!
//! Every report carries refit coefficients and the exact objective under
//! them, whatever the solver optimized internally.

mod clr;
mod enumerate;
mod global_bnb;
mod greedy;
mod local_search;
mod lpcns_mip;
mod oracle;
mod qpbo;
mod tune;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LpcError, Result};
use crate::objective::evaluate_objective;
use crate::regression::{self, DEFAULT_PROJECTOR_CAP};
use crate::scalar::Scalar;
use crate::types::{AlphaVector, Assignment, Dataset, SolveReport, SolveStatus};

pub use clr::solve_clr_baseline;
pub use global_bnb::solve_global_bnb;
pub use greedy::{greedy_descent, solve_greedy, GreedyRun};
pub use lpcns_mip::solve_lpcns_mip;
pub use oracle::solve_oracle;
pub use qpbo::{qpbo_branch_and_bound, solve_qpbo, QpboSearch};
pub use tune::{tune_alpha, TuneHop, TuneOutcome};

/// Hyperparameters shared by all solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig<T: Scalar = f64> {
    pub lambda: T,
    /// `None` means `α_k = 1/K`.
    pub alphas: Option<AlphaVector<T>>,
    /// Node / enumeration budget for the exact paths.
    pub exact_budget_nodes: u64,
    /// Largest `N` for which the reduced formulations are solved exactly.
    pub exact_n_cap: usize,
    pub restarts: usize,
    pub max_iters: usize,
    /// Early-stop gap for the global branch-and-bound; 0 certifies.
    pub rel_gap: f64,
    pub seed: u64,
    pub time_limit_seconds: f64,
    /// Lower clamp for tuned `α_k`; `None` means `1/(4K)`.
    pub alpha_floor: Option<T>,
    pub max_alpha_hops: usize,
    /// Run restarts on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    pub projector_cap: usize,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            lambda: T::one(),
            alphas: None,
            exact_budget_nodes: 1 << 24,
            exact_n_cap: 20,
            restarts: 20,
            max_iters: 100,
            rel_gap: 0.05,
            seed: 0,
            time_limit_seconds: f64::INFINITY,
            alpha_floor: None,
            max_alpha_hops: 10,
            parallel: false,
            projector_cap: DEFAULT_PROJECTOR_CAP,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn with_lambda(lambda: T) -> Self {
        Self { lambda, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| {
            Err(LpcError::InvalidConfig {
                field: field.into(),
                reason,
            })
        };
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return bad("lambda", format!("must be finite and nonnegative, got {}", self.lambda));
        }
        if self.exact_budget_nodes == 0 {
            return bad("exact_budget_nodes", "must be positive".into());
        }
        if self.exact_n_cap == 0 {
            return bad("exact_n_cap", "must be positive".into());
        }
        if self.restarts == 0 {
            return bad("restarts", "must be positive".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters", "must be positive".into());
        }
        if !(0.0..1.0).contains(&self.rel_gap) {
            return bad("rel_gap", format!("must lie in [0, 1), got {}", self.rel_gap));
        }
        if !(self.time_limit_seconds > 0.0) {
            return bad("time_limit_seconds", "must be positive".into());
        }
        if self.max_alpha_hops == 0 {
            return bad("max_alpha_hops", "must be positive".into());
        }
        if let Some(f) = self.alpha_floor {
            if !(f > T::zero()) {
                return bad("alpha_floor", format!("must be positive, got {f}"));
            }
        }
        Ok(())
    }

    /// Configured `α`, or the uniform default for `k` clusters.
    pub fn alphas_for(&self, k: usize) -> Result<AlphaVector<T>> {
        match &self.alphas {
            Some(a) if a.len() != k => Err(LpcError::DimensionMismatch(format!("{} alphas for {} clusters", a.len(), k))),
            Some(a) => Ok(a.clone()),
            None => Ok(AlphaVector::uniform(k)),
        }
    }

    pub(crate) fn require_lambda(&self) -> Result<()> {
        if self.lambda > T::zero() {
            Ok(())
        } else {
            Err(LpcError::LambdaRequired(self.lambda.as_f64()))
        }
    }

    /// Independent random stream for restart `r`.
    pub(crate) fn restart_rng(&self, r: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r as u64 + 1);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Oracle,
    Global,
    LpcnsMip,
    LpcnsQpbo,
    Greedy,
    Clr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Oracle,
        Method::Global,
        Method::LpcnsMip,
        Method::LpcnsQpbo,
        Method::Greedy,
        Method::Clr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Global => "global",
            Method::LpcnsMip => "lpcns-mip",
            Method::LpcnsQpbo => "lpcns-qpbo",
            Method::Greedy => "greedy",
            Method::Clr => "clr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = LpcError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| LpcError::InvalidConfig {
                field: "method".into(),
                reason: format!(
                    "unknown method `{s}` (expected one of {})",
                    Method::ALL.map(Method::as_str).join(", ")
                ),
            })
    }
}

/// Runs `method` on `ds`.
pub fn solve<T: Scalar>(method: Method, ds: &Dataset<T>, config: &SolverConfig<T>) -> Result<SolveReport<T>> {
    match method {
        Method::Oracle => solve_oracle(ds, config),
        Method::Global => solve_global_bnb(ds, config),
        Method::LpcnsMip => solve_lpcns_mip(ds, config),
        Method::LpcnsQpbo => solve_qpbo(ds, config),
        Method::Greedy => solve_greedy(ds, config),
        Method::Clr => solve_clr_baseline(ds, config),
    }
}

/// Fields the solvers fill in before [`finalize`] adds the refit.
pub(crate) struct Draft<T: Scalar> {
    pub labels: Vec<usize>,
    pub status: SolveStatus,
    pub nodes_or_iters: u64,
    pub surrogate_objective: Option<T>,
    pub restart_objectives: Vec<T>,
    pub restart_traces: Vec<Vec<T>>,
}

impl<T: Scalar> Draft<T> {
    pub fn new(labels: Vec<usize>, status: SolveStatus, nodes_or_iters: u64) -> Self {
        Self {
            labels,
            status,
            nodes_or_iters,
            surrogate_objective: None,
            restart_objectives: Vec::new(),
            restart_traces: Vec::new(),
        }
    }
}

/// Refits the final assignment and evaluates the exact objective.
pub(crate) fn finalize<T: Scalar>(
    ds: &Dataset<T>,
    config: &SolverConfig<T>,
    draft: Draft<T>,
    started: Instant,
) -> Result<SolveReport<T>> {
    let assignment = Assignment::new(draft.labels, ds.k())?;
    let coefficients = regression::refit_lenient(ds, &assignment, config.lambda)?;
    let objective = evaluate_objective(ds, &assignment, &coefficients)?;
    Ok(SolveReport {
        assignment,
        coefficients,
        objective,
        status: draft.status,
        nodes_or_iters: draft.nodes_or_iters,
        wall_seconds: started.elapsed().as_secs_f64(),
        seed: config.seed,
        surrogate_objective: draft.surrogate_objective,
        restart_objectives: draft.restart_objectives,
        restart_traces: draft.restart_traces,
    })
}

/// Exact objective after refitting `labels`.
pub(crate) fn refit_objective<T: Scalar>(ds: &Dataset<T>, labels: &[usize], lambda: T) -> Result<T> {
    let asg = Assignment::new(labels.to_vec(), ds.k())?;
    let coefs = regression::refit_lenient(ds, &asg, lambda)?;
    evaluate_objective(ds, &asg, &coefs)
}

pub(crate) fn random_labels<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Runs `f` once per restart index, on the rayon pool when asked. Output is
/// in restart order either way.
pub(crate) fn run_restarts<R, F>(restarts: usize, parallel: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if parallel {
        use rayon::prelude::*;
        (0..restarts).into_par_iter().map(f).collect()
    } else {
        (0..restarts).map(f).collect()
    }
}

/// `K^m` as a float, to compare against budgets without overflow.
pub(crate) fn enumeration_size(k: usize, m: usize) -> f64 {
    (k as f64).powi(m as i32)
}

pub(crate) struct Deadline {
    started: Instant,
    limit: f64,
}

impl Deadline {
    pub fn new(started: Instant, limit: f64) -> Self {
        Self { started, limit }
    }

    pub fn expired(&self) -> bool {
        self.limit.is_finite() && self.started.elapsed().as_secs_f64() > self.limit
    }
}
