//! First-improvement relocate / swap descent over labelings.

use ndarray::Array2;

use crate::regression::{ClusterStats, QpboInstance, RegressionCache};
use crate::scalar::Scalar;
use crate::types::Dataset;

/// A labeling plus incremental bookkeeping. Deltas are changes in a value
/// being minimized.
pub(crate) trait MoveModel<T: Scalar> {
    fn k(&self) -> usize;
    fn labels(&self) -> &[usize];
    fn value(&self) -> T;
    fn relocate_delta(&self, i: usize, to: usize) -> T;
    fn relocate(&mut self, i: usize, to: usize);

    fn swap_delta(&self, i: usize, j: usize) -> T;

    fn swap(&mut self, i: usize, j: usize) {
        let (a, c) = (self.labels()[i], self.labels()[j]);
        self.relocate(i, c);
        self.relocate(j, a);
    }
}

/// Passes of relocations followed by swaps until nothing improves or
/// `max_passes` is hit. Returns the number of passes run.
pub(crate) fn descend<T: Scalar, M: MoveModel<T>>(model: &mut M, max_passes: usize) -> usize {
    let n = model.labels().len();
    let k = model.k();
    let mut passes = 0;
    while passes < max_passes {
        passes += 1;
        let tol = T::lit(1e-10) * model.value().abs().max(T::one());
        let mut improved = false;
        for i in 0..n {
            let a = model.labels()[i];
            for c in 0..k {
                if c != a && model.relocate_delta(i, c) < -tol {
                    model.relocate(i, c);
                    improved = true;
                    break;
                }
            }
        }
        if k > 1 {
            for i in 0..n {
                for j in i + 1..n {
                    if model.labels()[i] != model.labels()[j] && model.swap_delta(i, j) < -tol {
                        model.swap(i, j);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    passes
}

/// Approximated objective `Σ_k ‖y_k − X_k w*_k‖² + λ‖w*_k‖²` with
/// `w*_k = A*_k X_kᵀ y_k`.
pub(crate) struct LpcnsModel<'a, T: Scalar> {
    ds: &'a Dataset<T>,
    cache: &'a RegressionCache<T>,
    labels: Vec<usize>,
    stats: Vec<ClusterStats<T>>,
    values: Vec<T>,
}

impl<'a, T: Scalar> LpcnsModel<'a, T> {
    pub fn new(ds: &'a Dataset<T>, cache: &'a RegressionCache<T>, labels: Vec<usize>) -> Self {
        let k = ds.k();
        let mut stats = vec![ClusterStats::empty(ds.dim()); k];
        for (i, &l) in labels.iter().enumerate() {
            stats[l].add(ds.row(i), ds.target(i));
        }
        let mut m = Self {
            ds,
            cache,
            labels,
            stats,
            values: vec![T::zero(); k],
        };
        for c in 0..k {
            m.values[c] = m.modified_value(c, &[]);
        }
        m
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    /// Cluster value after adding (`+1`) or removing (`-1`) samples.
    fn modified_value(&self, c: usize, mods: &[(usize, T)]) -> T {
        let s = &self.stats[c];
        let lambda = self.cache.lambda();
        let mut b = s.xty.clone();
        let mut yty = s.yty;
        for &(i, sign) in mods {
            let y = self.ds.target(i);
            b.scaled_add(sign * y, &self.ds.row(i));
            yty += sign * y * y;
        }
        let w = self.cache.a_star(c).dot(&b);
        let mut wgw = w.dot(&s.gram.dot(&w));
        for &(i, sign) in mods {
            let xw = self.ds.row(i).dot(&w);
            wgw += sign * xw * xw;
        }
        (yty - T::lit(2.0) * w.dot(&b) + wgw + lambda * w.dot(&w)).max(T::zero())
    }
}

impl<T: Scalar> MoveModel<T> for LpcnsModel<'_, T> {
    fn k(&self) -> usize {
        self.stats.len()
    }

    fn labels(&self) -> &[usize] {
        &self.labels
    }

    fn value(&self) -> T {
        self.values.iter().copied().sum()
    }

    fn relocate_delta(&self, i: usize, to: usize) -> T {
        let a = self.labels[i];
        let one = T::one();
        self.modified_value(a, &[(i, -one)]) + self.modified_value(to, &[(i, one)]) - self.values[a] - self.values[to]
    }

    fn relocate(&mut self, i: usize, to: usize) {
        let a = self.labels[i];
        self.stats[a].remove(self.ds.row(i), self.ds.target(i));
        self.stats[to].add(self.ds.row(i), self.ds.target(i));
        self.labels[i] = to;
        self.values[a] = self.modified_value(a, &[]);
        self.values[to] = self.modified_value(to, &[]);
    }

    fn swap_delta(&self, i: usize, j: usize) -> T {
        let (a, c) = (self.labels[i], self.labels[j]);
        let one = T::one();
        self.modified_value(a, &[(i, -one), (j, one)]) + self.modified_value(c, &[(j, -one), (i, one)])
            - self.values[a]
            - self.values[c]
    }
}

/// Quadratic gain `Σ_k Σ_{i,j ∈ k} q^k_ij`, maximized; the model minimizes
/// its negation.
pub(crate) struct QpboModel<'a, T: Scalar> {
    inst: &'a QpboInstance<T>,
    labels: Vec<usize>,
    /// `sums[[i, c]] = Σ_{j ∈ c, j ≠ i} q^c_ij`.
    sums: Array2<T>,
    gain: T,
}

impl<'a, T: Scalar> QpboModel<'a, T> {
    pub fn new(inst: &'a QpboInstance<T>, labels: Vec<usize>) -> Self {
        let n = labels.len();
        let k = inst.k();
        let mut sums = Array2::zeros((n, k));
        for c in 0..k {
            let q = inst.gain(c);
            let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
            for i in 0..n {
                let mut s = T::zero();
                for &j in &members {
                    if j != i {
                        s += q[[i, j]];
                    }
                }
                sums[[i, c]] = s;
            }
        }
        let mut gain = T::zero();
        for (i, &l) in labels.iter().enumerate() {
            gain += inst.gain(l)[[i, i]] + sums[[i, l]];
        }
        Self { inst, labels, sums, gain }
    }

    #[cfg(test)]
    pub fn gain(&self) -> T {
        self.gain
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    fn own_gain(&self, i: usize, c: usize) -> T {
        T::lit(2.0) * self.sums[[i, c]] + self.inst.gain(c)[[i, i]]
    }
}

impl<T: Scalar> MoveModel<T> for QpboModel<'_, T> {
    fn k(&self) -> usize {
        self.inst.k()
    }

    fn labels(&self) -> &[usize] {
        &self.labels
    }

    fn value(&self) -> T {
        -self.gain
    }

    fn relocate_delta(&self, i: usize, to: usize) -> T {
        let a = self.labels[i];
        self.own_gain(i, a) - self.own_gain(i, to)
    }

    fn relocate(&mut self, i: usize, to: usize) {
        let a = self.labels[i];
        self.gain -= self.relocate_delta(i, to);
        let qa = self.inst.gain(a);
        let qc = self.inst.gain(to);
        for j in 0..self.labels.len() {
            if j != i {
                self.sums[[j, a]] -= qa[[j, i]];
                self.sums[[j, to]] += qc[[j, i]];
            }
        }
        self.labels[i] = to;
    }

    fn swap_delta(&self, i: usize, j: usize) -> T {
        let (a, c) = (self.labels[i], self.labels[j]);
        let d_i = self.own_gain(i, c) - self.own_gain(i, a);
        let d_j = self.own_gain(j, a) - self.own_gain(j, c);
        let cross = T::lit(2.0) * (self.inst.gain(a)[[i, j]] + self.inst.gain(c)[[i, j]]);
        -(d_i + d_j - cross)
    }
}

/// Labels used by both reduced-formulation heuristics: one random start per
/// restart, descended, keeping the lowest model value (earliest on ties).
pub(crate) struct Restarted<T: Scalar> {
    pub labels: Vec<usize>,
    pub value: T,
    pub passes: u64,
    pub restart_labels: Vec<Vec<usize>>,
}

pub(crate) fn best_of<T: Scalar>(runs: Vec<(Vec<usize>, T, usize)>) -> Restarted<T> {
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.1 < runs[best].1 {
            best = r;
        }
    }
    let passes = runs.iter().map(|r| r.2 as u64).sum();
    Restarted {
        labels: runs[best].0.clone(),
        value: runs[best].1,
        passes,
        restart_labels: runs.into_iter().map(|r| r.0).collect(),
    }
}
