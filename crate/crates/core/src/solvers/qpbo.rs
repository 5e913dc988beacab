//! Quadratic-gain formulation: maximize `Σ_k Σ_{i,j} z_ik z_jk q^k_ij`.

use std::time::Instant;

use crate::error::Result;
use crate::regression::{build_cache_with_cap, build_qpbo, QpboInstance};
use crate::scalar::Scalar;
use crate::types::{Dataset, SolveReport, SolveStatus};

use super::local_search::{best_of, descend, MoveModel, QpboModel};
use super::{finalize, random_labels, refit_objective, run_restarts, Draft, SolverConfig};

/// Outcome of [`qpbo_branch_and_bound`].
#[derive(Debug, Clone)]
pub struct QpboSearch<T: Scalar = f64> {
    pub labels: Vec<usize>,
    pub gain: T,
    pub nodes: u64,
    /// False when the node budget stopped the search.
    pub complete: bool,
}

/// Depth-first search over samples in index order. A node's bound is the
/// locked gain plus, for undecided samples, the best diagonal entry and the
/// best positive off-diagonal pair terms. Sample 0 is pinned when the gain
/// matrix is shared (labels are then interchangeable).
pub fn qpbo_branch_and_bound<T: Scalar>(inst: &QpboInstance<T>, node_budget: u64) -> QpboSearch<T> {
    let n = inst.n();
    let k = inst.k();
    let two = T::lit(2.0);
    // suffix[d]: optimistic gain still available once samples < d are fixed.
    let mut suffix = vec![T::zero(); n + 1];
    for d in (0..n).rev() {
        let mut add = (0..k).map(|c| inst.gain(c)[[d, d]]).fold(T::neg_infinity(), T::max);
        for j in 0..d {
            let best = (0..k).map(|c| two * inst.gain(c)[[d, j]]).fold(T::neg_infinity(), T::max);
            add += best.max(T::zero());
        }
        suffix[d] = suffix[d + 1] + add;
    }
    let mut s = Search {
        inst,
        suffix,
        labels: vec![0; n],
        best: vec![0; n],
        best_gain: T::neg_infinity(),
        nodes: 0,
        budget: node_budget,
        complete: true,
    };
    let first_choices = if inst.is_shared() { 1 } else { k };
    s.dfs(0, T::zero(), first_choices);
    QpboSearch {
        labels: s.best,
        gain: s.best_gain,
        nodes: s.nodes,
        complete: s.complete,
    }
}

struct Search<'a, T: Scalar> {
    inst: &'a QpboInstance<T>,
    suffix: Vec<T>,
    labels: Vec<usize>,
    best: Vec<usize>,
    best_gain: T,
    nodes: u64,
    budget: u64,
    complete: bool,
}

impl<T: Scalar> Search<'_, T> {
    fn dfs(&mut self, d: usize, locked: T, choices: usize) {
        let n = self.labels.len();
        if d == n {
            if locked > self.best_gain {
                self.best_gain = locked;
                self.best.copy_from_slice(&self.labels);
            }
            return;
        }
        if self.nodes >= self.budget {
            self.complete = false;
            return;
        }
        self.nodes += 1;
        let k = self.inst.k();
        let mut children: Vec<(usize, T)> = (0..choices)
            .map(|c| {
                let q = self.inst.gain(c);
                let mut g = q[[d, d]];
                for j in 0..d {
                    if self.labels[j] == c {
                        g += T::lit(2.0) * q[[d, j]];
                    }
                }
                (c, g)
            })
            .collect();
        children.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        for (c, g) in children {
            let value = locked + g;
            if value + self.suffix[d + 1] <= self.best_gain {
                continue;
            }
            self.labels[d] = c;
            self.dfs(d + 1, value, k);
            if !self.complete {
                return;
            }
        }
    }
}

/// Solves the quadratic form. Exact branch-and-bound up to `exact_n_cap`
/// samples, multi-start relocate/swap search beyond. Reports the refit
/// objective; `surrogate_objective` holds the gain reached.
pub fn solve_qpbo<T: Scalar>(ds: &Dataset<T>, config: &SolverConfig<T>) -> Result<SolveReport<T>> {
    config.validate()?;
    config.require_lambda()?;
    let started = Instant::now();
    let alphas = config.alphas_for(ds.k())?;
    let cache = build_cache_with_cap(ds, config.lambda, &alphas, config.projector_cap)?;
    let inst = build_qpbo(&cache, ds)?;
    let draft = if ds.n() <= config.exact_n_cap {
        let found = qpbo_branch_and_bound(&inst, config.exact_budget_nodes);
        let status = if found.complete { SolveStatus::Exact } else { SolveStatus::BudgetExhausted };
        let mut draft = Draft::new(found.labels, status, found.nodes);
        draft.surrogate_objective = Some(found.gain);
        draft
    } else {
        let runs = run_restarts(config.restarts, config.parallel, |r| {
            let start = random_labels(&mut config.restart_rng(r), ds.n(), ds.k());
            let mut model = QpboModel::new(&inst, start);
            let passes = descend(&mut model, config.max_iters);
            let value = model.value();
            (model.into_labels(), value, passes)
        });
        let best = best_of(runs);
        let mut draft = Draft::new(best.labels, SolveStatus::Heuristic, best.passes);
        draft.surrogate_objective = Some(-best.value);
        draft.restart_objectives = best
            .restart_labels
            .iter()
            .map(|l| refit_objective(ds, l, config.lambda))
            .collect::<Result<_>>()?;
        draft
    };
    finalize(ds, config, draft, started)
}
