//! Approximated-objective solver.

use std::time::Instant;

use crate::error::Result;
use crate::regression::{build_cache_with_cap, ClusterStats, RegressionCache};
use crate::scalar::Scalar;
use crate::types::{Dataset, SolveReport, SolveStatus};

use super::enumerate::Odometer;
use super::local_search::{best_of, descend, LpcnsModel, MoveModel};
use super::{enumeration_size, finalize, random_labels, refit_objective, run_restarts, Draft, SolverConfig};

/// Minimizes `Σ_k ‖Z_k y − Z_k X w*_k‖² + λ‖w*_k‖²`, `w*_k = A*_k XᵀZ_k y`.
///
/// Exact by enumeration when `N ≤ exact_n_cap` and the labeling count fits
/// the budget; multi-start relocate/swap descent otherwise. The reported
/// `objective` is the exact one after refitting; the surrogate value is in
/// `surrogate_objective`.
pub fn solve_lpcns_mip<T: Scalar>(ds: &Dataset<T>, config: &SolverConfig<T>) -> Result<SolveReport<T>> {
    config.validate()?;
    config.require_lambda()?;
    let started = Instant::now();
    let alphas = config.alphas_for(ds.k())?;
    let cache = build_cache_with_cap(ds, config.lambda, &alphas, config.projector_cap)?;
    let fixed = usize::from(alphas.all_equal());
    let count = enumeration_size(ds.k(), ds.n() - fixed.min(ds.n()));
    let draft = if ds.n() <= config.exact_n_cap && count <= config.exact_budget_nodes as f64 {
        enumerate(ds, &cache, fixed)?
    } else {
        heuristic(ds, &cache, config)?
    };
    finalize(ds, config, draft, started)
}

fn enumerate<T: Scalar>(ds: &Dataset<T>, cache: &RegressionCache<T>, fixed: usize) -> Result<Draft<T>> {
    let (n, k) = (ds.n(), ds.k());
    let lambda = cache.lambda();
    let mut stats = vec![ClusterStats::empty(ds.dim()); k];
    for i in 0..n {
        stats[0].add(ds.row(i), ds.target(i));
    }
    let value = |c: usize, s: &ClusterStats<T>| {
        let w = cache.w_star_from_xty(c, s.xty.view());
        s.objective_at(w.view(), lambda)
    };
    let mut values: Vec<T> = (0..k).map(|c| value(c, &stats[c])).collect();
    let mut odo = Odometer::new(n, k, fixed);
    let mut changes = Vec::new();
    let mut best = vec![0; n];
    let mut best_value = T::infinity();
    let mut visited = 0u64;
    while odo.advance(&mut changes) {
        visited += 1;
        for &(i, old, new) in &changes {
            stats[old].remove(ds.row(i), ds.target(i));
            stats[new].add(ds.row(i), ds.target(i));
        }
        for &(_, old, new) in &changes {
            values[old] = value(old, &stats[old]);
            values[new] = value(new, &stats[new]);
        }
        let total: T = values.iter().copied().sum();
        if total < best_value {
            best_value = total;
            best.copy_from_slice(odo.labels());
        }
    }
    let mut draft = Draft::new(best, SolveStatus::Exact, visited);
    draft.surrogate_objective = Some(best_value);
    Ok(draft)
}

fn heuristic<T: Scalar>(ds: &Dataset<T>, cache: &RegressionCache<T>, config: &SolverConfig<T>) -> Result<Draft<T>> {
    let runs = run_restarts(config.restarts, config.parallel, |r| {
        let start = random_labels(&mut config.restart_rng(r), ds.n(), ds.k());
        let mut model = LpcnsModel::new(ds, cache, start);
        let passes = descend(&mut model, config.max_iters);
        let value = model.value();
        (model.into_labels(), value, passes)
    });
    let best = best_of(runs);
    let mut draft = Draft::new(best.labels, SolveStatus::Heuristic, best.passes);
    draft.surrogate_objective = Some(best.value);
    draft.restart_objectives = best
        .restart_labels
        .iter()
        .map(|l| refit_objective(ds, l, config.lambda))
        .collect::<Result<_>>()?;
    Ok(draft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::evaluate_lpcns_objective;
    use crate::types::Assignment;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ds(seed: u64, n: usize) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = Array2::from_shape_fn((n, 1), |_| rng.random_range(-2.0..2.0));
        let y = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        Dataset::from_raw(raw.view(), y, 2).unwrap()
    }

    #[test]
    fn exact_path_reports_surrogate_of_its_assignment() {
        let ds = random_ds(4, 9);
        let cfg = SolverConfig::with_lambda(0.5);
        let r = solve_lpcns_mip(&ds, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Exact);
        let cache = crate::regression::build_cache(&ds, 0.5, &crate::types::AlphaVector::uniform(2)).unwrap();
        let s = evaluate_lpcns_objective(&ds, &r.assignment, &cache).unwrap();
        assert!((s - r.surrogate_objective.unwrap()).abs() < 1e-9);
        // No labeling beats it.
        for mask in 0..(1u32 << 9) {
            let labels = (0..9).map(|i| ((mask >> i) & 1) as usize).collect();
            let v = evaluate_lpcns_objective(&ds, &Assignment::new(labels, 2).unwrap(), &cache).unwrap();
            assert!(v >= s - 1e-9);
        }
    }

    #[test]
    fn heuristic_path_beyond_cap() {
        let ds = random_ds(5, 40);
        let mut cfg = SolverConfig::with_lambda(0.5);
        cfg.restarts = 3;
        let r = solve_lpcns_mip(&ds, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Heuristic);
        assert_eq!(r.restart_objectives.len(), 3);
    }
}
