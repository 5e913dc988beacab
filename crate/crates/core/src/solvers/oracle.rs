//! Brute-force reference: every labeling, exact ridge per cluster.

use std::time::Instant;

use crate::error::{LpcError, Result};
use crate::regression::ClusterStats;
use crate::scalar::Scalar;
use crate::types::{Dataset, SolveReport, SolveStatus};

use super::enumerate::Odometer;
use super::{enumeration_size, finalize, Draft, SolverConfig};

/// Minimizes the exact objective over all `K^(N−1)` labelings (sample 0 is
/// pinned to cluster 0). Works at `λ = 0` through the semidefinite
/// fallback. Fails with [`LpcError::BudgetExceeded`] past the node budget.
pub fn solve_oracle<T: Scalar>(ds: &Dataset<T>, config: &SolverConfig<T>) -> Result<SolveReport<T>> {
    config.validate()?;
    let started = Instant::now();
    let (n, k) = (ds.n(), ds.k());
    let needed = enumeration_size(k, n - 1);
    if needed > config.exact_budget_nodes as f64 {
        return Err(LpcError::BudgetExceeded {
            needed,
            budget: config.exact_budget_nodes,
        });
    }
    let lambda = config.lambda;
    let mut stats = vec![ClusterStats::empty(ds.dim()); k];
    for i in 0..n {
        stats[0].add(ds.row(i), ds.target(i));
    }
    let mut values = vec![T::zero(); k];
    for c in 0..k {
        values[c] = stats[c].optimum(lambda)?;
    }
    let mut odo = Odometer::new(n, k, 1);
    let mut changes = Vec::new();
    let mut dirty = vec![false; k];
    let mut best_value = T::infinity();
    let mut best = vec![0; n];
    let mut visited = 0u64;
    while odo.advance(&mut changes) {
        visited += 1;
        for &(i, old, new) in &changes {
            stats[old].remove(ds.row(i), ds.target(i));
            stats[new].add(ds.row(i), ds.target(i));
            dirty[old] = true;
            dirty[new] = true;
        }
        for c in 0..k {
            if dirty[c] {
                values[c] = stats[c].optimum(lambda)?;
                dirty[c] = false;
            }
        }
        let total: T = values.iter().copied().sum();
        if total < best_value {
            best_value = total;
            best.copy_from_slice(odo.labels());
        }
    }
    finalize(ds, config, Draft::new(best, SolveStatus::Exact, visited), started)
}
