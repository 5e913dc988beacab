//! Branch-and-bound on the exact objective.

use std::time::Instant;

use ndarray::{Array1, ArrayView1};

use crate::error::Result;
use crate::linalg::{self, Cholesky};
use crate::regression::ClusterStats;
use crate::scalar::Scalar;
use crate::types::{Dataset, SolveReport, SolveStatus};

use super::greedy::solve_greedy;
use super::{finalize, Deadline, Draft, SolverConfig};

/// Minimizes the exact objective. Requires `λ > 0`.
///
/// Samples are branched in order of decreasing `|y_i|`. A sample may join an
/// existing cluster or open the next empty one, so each partition is visited
/// once. The bound adds to the fixed clusters' optima the largest, over
/// unassigned samples, of the cheapest single-sample increase. The incumbent
/// starts from the greedy baseline.
///
/// Status is `exact` when the tree closes, `heuristic` when the relative gap
/// drops under `rel_gap > 0`, `budget_exhausted` on node or time limits.
pub fn solve_global_bnb<T: Scalar>(ds: &Dataset<T>, config: &SolverConfig<T>) -> Result<SolveReport<T>> {
    config.validate()?;
    config.require_lambda()?;
    let started = Instant::now();
    let seed = solve_greedy(ds, config)?;
    let n = ds.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        ds.target(b)
            .abs()
            .partial_cmp(&ds.target(a).abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let empty = ClusterState::new(ds.dim(), config.lambda)?;
    let mut search = Search {
        ds,
        lambda: config.lambda,
        order,
        clusters: vec![empty; ds.k()],
        used: 0,
        labels: vec![usize::MAX; n],
        incumbent: seed.objective,
        best: seed.assignment.labels().to_vec(),
        open: vec![T::infinity(); n + 1],
        nodes: 0,
        budget: config.exact_budget_nodes,
        deadline: Deadline::new(started, config.time_limit_seconds),
        rel_gap: T::lit(config.rel_gap),
        stop: None,
    };
    search.dfs(0, T::zero());
    let status = search.stop.unwrap_or(SolveStatus::Exact);
    let draft = Draft::new(search.best, status, search.nodes);
    finalize(ds, config, draft, started)
}

#[derive(Clone)]
struct ClusterState<T: Scalar> {
    stats: ClusterStats<T>,
    chol: Cholesky<T>,
    w: Array1<T>,
    value: T,
}

impl<T: Scalar> ClusterState<T> {
    fn new(dim: usize, lambda: T) -> Result<Self> {
        let stats = ClusterStats::empty(dim);
        Self::from_stats(stats, lambda)
    }

    fn from_stats(stats: ClusterStats<T>, lambda: T) -> Result<Self> {
        let mut a = stats.gram.clone();
        linalg::add_diagonal(&mut a, lambda);
        let chol = Cholesky::factor(a.view())?;
        let w = chol.solve_vec(stats.xty.view());
        let value = stats.objective_at(w.view(), lambda);
        Ok(Self { stats, chol, w, value })
    }

    /// Exact increase of the cluster optimum when `(x, y)` joins:
    /// `r² / (1 + xᵀ(G + λI)⁻¹x)` with `r` the current residual.
    fn increase(&self, x: ArrayView1<'_, T>, y: T) -> T {
        let r = y - x.dot(&self.w);
        let l = self.chol.lower();
        let d = x.len();
        let mut z = vec![T::zero(); d];
        let mut h = T::zero();
        for i in 0..d {
            let mut s = x[i];
            for j in 0..i {
                s -= l[[i, j]] * z[j];
            }
            z[i] = s / l[[i, i]];
            h += z[i] * z[i];
        }
        r * r / (T::one() + h)
    }
}

struct Search<'a, T: Scalar> {
    ds: &'a Dataset<T>,
    lambda: T,
    order: Vec<usize>,
    clusters: Vec<ClusterState<T>>,
    /// Clusters `0..used` are nonempty.
    used: usize,
    labels: Vec<usize>,
    incumbent: T,
    best: Vec<usize>,
    /// `open[t]`: smallest bound among siblings still queued at depth `t`.
    open: Vec<T>,
    nodes: u64,
    budget: u64,
    deadline: Deadline,
    rel_gap: T,
    stop: Option<SolveStatus>,
}

impl<T: Scalar> Search<'_, T> {
    fn prefix_value(&self) -> T {
        self.clusters[..self.used].iter().map(|c| c.value).sum()
    }

    fn candidates(&self) -> usize {
        (self.used + 1).min(self.clusters.len())
    }

    /// Largest over unassigned samples of the cheapest increase.
    fn lookahead(&self, depth: usize) -> T {
        let mut worst = T::zero();
        for &i in &self.order[depth..] {
            let (x, y) = (self.ds.row(i), self.ds.target(i));
            let mut cheapest = T::infinity();
            for c in 0..self.candidates() {
                cheapest = cheapest.min(self.clusters[c].increase(x, y));
                if cheapest <= worst {
                    break;
                }
            }
            worst = worst.max(cheapest);
        }
        worst
    }

    fn should_stop(&mut self, current: T, depth: usize) -> bool {
        if self.stop.is_some() {
            return true;
        }
        if self.nodes >= self.budget {
            self.stop = Some(SolveStatus::BudgetExhausted);
            return true;
        }
        if self.nodes % 1024 == 0 && self.deadline.expired() {
            self.stop = Some(SolveStatus::BudgetExhausted);
            return true;
        }
        if self.rel_gap > T::zero() && self.nodes % 256 == 0 {
            let lower = self.open[..=depth].iter().copied().fold(current, T::min);
            if self.incumbent - lower <= self.rel_gap * self.incumbent.abs() {
                self.stop = Some(SolveStatus::Heuristic);
                return true;
            }
        }
        false
    }

    fn dfs(&mut self, depth: usize, bound: T) {
        let n = self.order.len();
        let prefix = self.prefix_value();
        if depth == n {
            if prefix < self.incumbent {
                self.incumbent = prefix;
                self.best.copy_from_slice(&self.labels);
            }
            return;
        }
        if self.should_stop(bound, depth) {
            return;
        }
        self.nodes += 1;
        if prefix + self.lookahead(depth) >= self.incumbent {
            return;
        }
        let i = self.order[depth];
        let (x, y) = (self.ds.row(i), self.ds.target(i));
        let mut children: Vec<(usize, T)> = (0..self.candidates())
            .map(|c| (c, prefix + self.clusters[c].increase(x, y)))
            .collect();
        children.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        for (idx, &(c, child_bound)) in children.iter().enumerate() {
            if child_bound >= self.incumbent {
                break;
            }
            self.open[depth] = children.get(idx + 1).map_or(T::infinity(), |n| n.1);
            let saved = self.clusters[c].clone();
            let mut stats = saved.stats.clone();
            stats.add(x, y);
            self.clusters[c] = match ClusterState::from_stats(stats, self.lambda) {
                Ok(s) => s,
                Err(_) => {
                    self.clusters[c] = saved;
                    continue;
                }
            };
            let opened = c == self.used;
            if opened {
                self.used += 1;
            }
            self.labels[i] = c;
            self.dfs(depth + 1, child_bound);
            self.labels[i] = usize::MAX;
            if opened {
                self.used -= 1;
            }
            self.clusters[c] = saved;
            if self.stop.is_some() {
                break;
            }
        }
        self.open[depth] = T::infinity();
    }
}
