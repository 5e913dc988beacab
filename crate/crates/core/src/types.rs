//! Domain types shared by every module.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{LpcError, Result};
use crate::scalar::Scalar;

/// Feature matrix (bias column last, fixed at one), targets and the intended
/// cluster count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar = f64> {
    features: Array2<T>,
    targets: Array1<T>,
    k: usize,
}

impl<T: Scalar> Dataset<T> {
    /// Wraps a feature matrix that already carries the bias column.
    pub fn new(features: Array2<T>, targets: Array1<T>, k: usize) -> Result<Self> {
        let n = features.nrows();
        if n != targets.len() {
            return Err(LpcError::DimensionMismatch(format!(
                "{} feature rows but {} targets",
                n,
                targets.len()
            )));
        }
        if k == 0 {
            return Err(LpcError::InvalidDataset("k must be at least 1".into()));
        }
        if n < k {
            return Err(LpcError::InvalidDataset(format!("{n} samples cannot fill {k} clusters")));
        }
        if features.ncols() == 0 {
            return Err(LpcError::InvalidDataset("feature matrix has no bias column".into()));
        }
        let bias = features.ncols() - 1;
        for (i, row) in features.rows().into_iter().enumerate() {
            if row[bias] != T::one() {
                return Err(LpcError::InvalidDataset(format!(
                    "bias column must be 1.0 (row {i} has {})",
                    row[bias]
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LpcError::InvalidDataset(format!("row {i} has a non-finite feature")));
            }
        }
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(LpcError::InvalidDataset(format!("target {i} is not finite")));
        }
        Ok(Self { features, targets, k })
    }

    /// Appends the bias column to an `N×D` raw feature matrix.
    pub fn from_raw(raw: ArrayView2<'_, T>, targets: Array1<T>, k: usize) -> Result<Self> {
        let (n, d) = raw.dim();
        let mut features = Array2::<T>::ones((n, d + 1));
        features.slice_mut(ndarray::s![.., ..d]).assign(&raw);
        Self::new(features, targets, k)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    /// Columns including the bias (`D + 1`).
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Feature count excluding the bias (`D`).
    pub fn num_features(&self) -> usize {
        self.features.ncols() - 1
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn targets(&self) -> &Array1<T> {
        &self.targets
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.features.row(i)
    }

    pub fn target(&self, i: usize) -> T {
        self.targets[i]
    }

    /// Same data with a different cluster count.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.features.clone(), self.targets.clone(), k)
    }

    /// Uncentered covariance `XᵀX`.
    pub fn gram(&self) -> Array2<T> {
        self.features.t().dot(&self.features)
    }

    /// Converts the element type (e.g. to run the solvers in `f32`).
    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            features: self.features.mapv(|v| U::lit(v.as_f64())),
            targets: self.targets.mapv(|v| U::lit(v.as_f64())),
            k: self.k,
        }
    }
}

/// Per-sample cluster labels in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(LpcError::InvalidAssignment("k must be at least 1".into()));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(LpcError::InvalidAssignment(format!("label {l} of sample {i} is outside [0, {k})")));
        }
        Ok(Self { labels, k })
    }

    /// Every sample in cluster 0.
    pub fn single(n: usize, k: usize) -> Self {
        Self { labels: vec![0; n], k: k.max(1) }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Cluster sizes `n_k`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Sample indices in cluster `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == c).then_some(i))
            .collect()
    }

    /// Dense `K×N` one-hot matrix (row `k` is the diagonal of `Z_k`).
    pub fn one_hot(&self) -> Array2<u8> {
        let mut z = Array2::<u8>::zeros((self.k, self.labels.len()));
        for (i, &l) in self.labels.iter().enumerate() {
            z[[l, i]] = 1;
        }
        z
    }

    /// Applies `perm[old] = new` to every label.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        Self {
            labels: self.labels.iter().map(|&l| perm[l]).collect(),
            k: self.k,
        }
    }

    /// Relabels clusters in order of first appearance so that equal
    /// partitions compare equal.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Self { labels, k: self.k }
    }

    /// True when both describe the same partition up to relabeling.
    pub fn same_partition(&self, other: &Self) -> bool {
        self.labels.len() == other.labels.len() && self.canonical().labels == other.canonical().labels
    }

    pub(crate) fn from_labels_unchecked(labels: Vec<usize>, k: usize) -> Self {
        debug_assert!(labels.iter().all(|&l| l < k));
        Self { labels, k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefKind {
    /// Per-cluster ridge solution for a given assignment.
    Exact,
    /// `w*` computed through the shared precomputed inverse.
    Approximated,
    /// Exact ridge solution recomputed for a solver's final assignment.
    Refit,
}

impl CoefKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CoefKind::Exact => "exact",
            CoefKind::Approximated => "approximated",
            CoefKind::Refit => "refit",
        }
    }
}

/// One coefficient vector of length `D + 1` per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet<T: Scalar = f64> {
    pub coefficients: Vec<Array1<T>>,
    pub lambda: T,
    pub kind: CoefKind,
}

impl<T: Scalar> CoefficientSet<T> {
    pub fn new(coefficients: Vec<Array1<T>>, lambda: T, kind: CoefKind) -> Result<Self> {
        if lambda < T::zero() || !lambda.is_finite() {
            return Err(LpcError::InvalidConfig {
                field: "lambda".into(),
                reason: format!("must be finite and nonnegative, got {lambda}"),
            });
        }
        if let Some(dim) = coefficients.first().map(|w| w.len()) {
            if coefficients.iter().any(|w| w.len() != dim) {
                return Err(LpcError::DimensionMismatch("coefficient vectors differ in length".into()));
            }
        }
        if coefficients.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(LpcError::InvalidDataset("non-finite coefficient".into()));
        }
        Ok(Self { coefficients, lambda, kind })
    }

    pub fn zeros(k: usize, dim: usize, lambda: T, kind: CoefKind) -> Self {
        Self {
            coefficients: vec![Array1::zeros(dim); k],
            lambda,
            kind,
        }
    }

    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn get(&self, c: usize) -> &Array1<T> {
        &self.coefficients[c]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.coefficients
            .iter()
            .map(|w| w.iter().map(|v| v.as_f64()).collect())
            .collect()
    }
}

/// Per-cluster size weights `α_k` used in the shared inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector<T: Scalar = f64> {
    alphas: Vec<T>,
}

impl<T: Scalar> AlphaVector<T> {
    pub fn new(alphas: Vec<T>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(LpcError::InvalidConfig {
                field: "alphas".into(),
                reason: "need at least one entry".into(),
            });
        }
        for (index, &a) in alphas.iter().enumerate() {
            if !(a > T::zero()) || !a.is_finite() {
                return Err(LpcError::InvalidAlpha { index, value: a.as_f64() });
            }
        }
        Ok(Self { alphas })
    }

    /// `α_k = 1/K`.
    pub fn uniform(k: usize) -> Self {
        let k = k.max(1);
        Self {
            alphas: vec![T::one() / T::from_count(k); k],
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.alphas
    }

    pub fn get(&self, c: usize) -> T {
        self.alphas[c]
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn all_equal(&self) -> bool {
        self.alphas.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Backed by a closed search tree or full enumeration.
    Exact,
    Heuristic,
    BudgetExhausted,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Exact => "exact",
            SolveStatus::Heuristic => "heuristic",
            SolveStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of any solver. `objective` is always the exact objective under
/// the refit coefficients, never a surrogate value.
#[derive(Debug, Clone)]
pub struct SolveReport<T: Scalar = f64> {
    pub assignment: Assignment,
    pub coefficients: CoefficientSet<T>,
    pub objective: T,
    pub status: SolveStatus,
    pub nodes_or_iters: u64,
    pub wall_seconds: f64,
    pub seed: u64,
    /// Value of the objective the solver actually optimized, when it differs
    /// from the refit objective (approximated and quadratic surrogates).
    pub surrogate_objective: Option<T>,
    /// Final refit objective of every restart, in restart order.
    pub restart_objectives: Vec<T>,
    /// Objective after each refit step, per restart (greedy only).
    pub restart_traces: Vec<Vec<T>>,
}
