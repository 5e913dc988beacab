//! Fixed-point tuning of the size weights `α_k`.

use crate::error::{LpcError, Result};
use crate::scalar::Scalar;
use crate::types::{AlphaVector, Assignment, Dataset, SolveReport};

use super::{solve, Method, SolverConfig};

/// One solve at a given `α`.
#[derive(Debug, Clone)]
pub struct TuneHop<T: Scalar = f64> {
    pub alphas: AlphaVector<T>,
    pub assignment: Assignment,
    pub objective: T,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome<T: Scalar = f64> {
    /// `α` of the best hop.
    pub alphas: AlphaVector<T>,
    pub report: SolveReport<T>,
    pub hops: Vec<TuneHop<T>>,
}

/// Starts at `α_k = 1/K` and repeatedly sets `α_k = max(n_k/N, floor)` from
/// the previous solution. Stops when an assignment repeats or after
/// `max_alpha_hops` solves, and returns the hop with the lowest refit
/// objective (earliest on ties).
pub fn tune_alpha<T: Scalar>(ds: &Dataset<T>, config: &SolverConfig<T>, inner: Method) -> Result<TuneOutcome<T>> {
    if !matches!(inner, Method::LpcnsMip | Method::LpcnsQpbo) {
        return Err(LpcError::InvalidConfig {
            field: "method".into(),
            reason: format!("alpha tuning needs lpcns-mip or lpcns-qpbo, got {inner}"),
        });
    }
    config.validate()?;
    let k = ds.k();
    let floor = config.alpha_floor.unwrap_or_else(|| T::one() / T::from_count(4 * k));
    let mut alphas = AlphaVector::uniform(k);
    let mut hops: Vec<TuneHop<T>> = Vec::new();
    let mut best: Option<(usize, SolveReport<T>)> = None;
    for _ in 0..config.max_alpha_hops {
        let cfg = SolverConfig {
            alphas: Some(alphas.clone()),
            ..config.clone()
        };
        let report = solve(inner, ds, &cfg)?;
        let repeated = hops.iter().any(|h| h.assignment == report.assignment);
        hops.push(TuneHop {
            alphas: alphas.clone(),
            assignment: report.assignment.clone(),
            objective: report.objective,
        });
        let idx = hops.len() - 1;
        if best.as_ref().is_none_or(|(_, b)| report.objective < b.objective) {
            best = Some((idx, report.clone()));
        }
        if repeated {
            break;
        }
        let n = T::from_count(ds.n());
        let next = report
            .assignment
            .sizes()
            .into_iter()
            .map(|s| (T::from_count(s) / n).max(floor))
            .collect();
        alphas = AlphaVector::new(next)?;
    }
    let (idx, report) = best.expect("at least one hop");
    Ok(TuneOutcome {
        alphas: hops[idx].alphas.clone(),
        report,
        hops,
    })
}
