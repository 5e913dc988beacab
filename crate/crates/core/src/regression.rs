//! Closed-form ridge machinery: per-cluster fits, the precomputed shared
//! inverse `A*_k = (α_k XᵀX + λI)⁻¹`, the `w*` approximation, refitting and
//! the quadratic gain matrix.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{LpcError, Result};
use crate::linalg::{self, Cholesky};
use crate::scalar::Scalar;
use crate::types::{AlphaVector, Assignment, CoefKind, CoefficientSet, Dataset};

/// Default ceiling on `N` for materializing `N×N` matrices.
pub const DEFAULT_PROJECTOR_CAP: usize = 4096;

/// Relative pivot cutoff for the semidefinite fallback used at `λ = 0`.
const PSD_PIVOT_TOL: f64 = 1e-12;

/// Sufficient statistics of one cluster: `X_kᵀX_k`, `X_kᵀy_k`, `y_kᵀy_k`
/// and the member count. Updated in `O(d²)` per sample.
#[derive(Debug, Clone)]
pub struct ClusterStats<T: Scalar = f64> {
    pub gram: Array2<T>,
    pub xty: Array1<T>,
    pub yty: T,
    pub count: usize,
}

impl<T: Scalar> ClusterStats<T> {
    pub fn empty(dim: usize) -> Self {
        Self {
            gram: Array2::zeros((dim, dim)),
            xty: Array1::zeros(dim),
            yty: T::zero(),
            count: 0,
        }
    }

    pub fn from_members(ds: &Dataset<T>, members: &[usize]) -> Self {
        let mut s = Self::empty(ds.dim());
        for &i in members {
            s.add(ds.row(i), ds.target(i));
        }
        s
    }

    /// One stats block per cluster of `asg`.
    pub fn per_cluster(ds: &Dataset<T>, asg: &Assignment) -> Vec<Self> {
        let mut stats = vec![Self::empty(ds.dim()); asg.k()];
        for (i, &l) in asg.labels().iter().enumerate() {
            stats[l].add(ds.row(i), ds.target(i));
        }
        stats
    }

    #[inline]
    pub fn add(&mut self, x: ArrayView1<'_, T>, y: T) {
        self.update(x, y, T::one());
        self.count += 1;
    }

    #[inline]
    pub fn remove(&mut self, x: ArrayView1<'_, T>, y: T) {
        self.update(x, y, -T::one());
        self.count -= 1;
    }

    fn update(&mut self, x: ArrayView1<'_, T>, y: T, sign: T) {
        let d = x.len();
        for a in 0..d {
            let xa = sign * x[a];
            for b in 0..d {
                self.gram[[a, b]] += xa * x[b];
            }
            self.xty[a] += xa * y;
        }
        self.yty += sign * y * y;
    }

    /// Ridge coefficients `(G + λI)⁻¹ b`. Empty clusters give the zero vector.
    pub fn ridge(&self, lambda: T) -> Result<Array1<T>> {
        if self.count == 0 {
            return Ok(Array1::zeros(self.xty.len()));
        }
        let mut a = self.gram.clone();
        linalg::add_diagonal(&mut a, lambda);
        Ok(Cholesky::factor(a.view())?.solve_vec(self.xty.view()))
    }

    /// Like [`ridge`](Self::ridge), but at `λ = 0` a rank-deficient Gram
    /// matrix falls back to an exact least-squares solution.
    pub fn ridge_lenient(&self, lambda: T) -> Result<Array1<T>> {
        match self.ridge(lambda) {
            Err(LpcError::NotPositiveDefinite { .. }) if lambda == T::zero() => {
                Ok(linalg::solve_psd(self.gram.view(), self.xty.view(), T::lit(PSD_PIVOT_TOL)))
            }
            other => other,
        }
    }

    /// `‖y_k − X_k w‖² + λ‖w‖²` from the statistics alone.
    pub fn objective_at(&self, w: ArrayView1<'_, T>, lambda: T) -> T {
        let gw = self.gram.dot(&w);
        let val = self.yty - T::lit(2.0) * w.dot(&self.xty) + w.dot(&gw) + lambda * w.dot(&w);
        val.max(T::zero())
    }

    /// Minimum of the cluster's ridge objective.
    pub fn optimum(&self, lambda: T) -> Result<T> {
        let w = self.ridge_lenient(lambda)?;
        Ok(self.objective_at(w.view(), lambda))
    }
}

/// Exact per-cluster ridge coefficients `w_k = (XᵀZ_kX + λI)⁻¹ XᵀZ_ky`.
pub fn ridge_fit<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, lambda: T) -> Result<CoefficientSet<T>> {
    fit_with(ds, asg, lambda, CoefKind::Exact, false)
}

/// Refit for a solver's final assignment. Same math as [`ridge_fit`].
pub fn refit<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, lambda: T) -> Result<CoefficientSet<T>> {
    fit_with(ds, asg, lambda, CoefKind::Refit, false)
}

/// Refit that tolerates rank-deficient clusters at `λ = 0`.
pub(crate) fn refit_lenient<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, lambda: T) -> Result<CoefficientSet<T>> {
    fit_with(ds, asg, lambda, CoefKind::Refit, true)
}

fn fit_with<T: Scalar>(
    ds: &Dataset<T>,
    asg: &Assignment,
    lambda: T,
    kind: CoefKind,
    lenient: bool,
) -> Result<CoefficientSet<T>> {
    check_assignment(ds, asg)?;
    check_lambda_nonneg(lambda)?;
    let coefficients = ClusterStats::per_cluster(ds, asg)
        .iter()
        .map(|s| if lenient { s.ridge_lenient(lambda) } else { s.ridge(lambda) })
        .collect::<Result<Vec<_>>>()?;
    CoefficientSet::new(coefficients, lambda, kind)
}

pub(crate) fn check_assignment<T: Scalar>(ds: &Dataset<T>, asg: &Assignment) -> Result<()> {
    if asg.len() != ds.n() {
        return Err(LpcError::DimensionMismatch(format!(
            "assignment has {} labels for {} samples",
            asg.len(),
            ds.n()
        )));
    }
    Ok(())
}

fn check_lambda_nonneg<T: Scalar>(lambda: T) -> Result<()> {
    if lambda < T::zero() || !lambda.is_finite() {
        return Err(LpcError::InvalidConfig {
            field: "lambda".into(),
            reason: format!("must be finite and nonnegative, got {lambda}"),
        });
    }
    Ok(())
}

/// Everything about the reduced formulations that does not depend on the
/// assignment. Immutable; rebuild it when the dataset, `λ` or `α` change.
#[derive(Debug, Clone)]
pub struct RegressionCache<T: Scalar = f64> {
    gram: Array2<T>,
    lambda: T,
    alphas: AlphaVector<T>,
    /// One inverse per distinct `α` value.
    inverses: Vec<Array2<T>>,
    /// `inverse_of[k]` indexes into `inverses`.
    inverse_of: Vec<usize>,
    /// `X A* Xᵀ`, only when every `α_k` is equal and `N` is under the cap.
    projector: Option<Array2<T>>,
    projector_cap: usize,
    n: usize,
}

impl<T: Scalar> RegressionCache<T> {
    pub fn gram(&self) -> &Array2<T> {
        &self.gram
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn alphas(&self) -> &AlphaVector<T> {
        &self.alphas
    }

    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// `A*_k = (α_k XᵀX + λI)⁻¹`.
    pub fn a_star(&self, k: usize) -> &Array2<T> {
        &self.inverses[self.inverse_of[k]]
    }

    pub fn distinct_inverses(&self) -> usize {
        self.inverses.len()
    }

    pub fn projector(&self) -> Option<&Array2<T>> {
        self.projector.as_ref()
    }

    pub fn projector_cap(&self) -> usize {
        self.projector_cap
    }

    /// `w*_k = A*_k X_kᵀ y_k` from precomputed cluster statistics.
    pub fn w_star_from_xty(&self, k: usize, xty: ArrayView1<'_, T>) -> Array1<T> {
        self.a_star(k).dot(&xty)
    }

    pub(crate) fn check_matches(&self, ds: &Dataset<T>) -> Result<()> {
        if ds.n() != self.n || ds.dim() != self.dim() || ds.k() != self.k() {
            return Err(LpcError::DimensionMismatch(format!(
                "cache built for N={}, D+1={}, K={} but dataset has N={}, D+1={}, K={}",
                self.n,
                self.dim(),
                self.k(),
                ds.n(),
                ds.dim(),
                ds.k()
            )));
        }
        Ok(())
    }
}

/// Precomputes `A*_k` for every distinct `α_k` (and the shared projector when
/// all `α_k` agree and `N ≤` [`DEFAULT_PROJECTOR_CAP`]).
pub fn build_cache<T: Scalar>(ds: &Dataset<T>, lambda: T, alphas: &AlphaVector<T>) -> Result<RegressionCache<T>> {
    build_cache_with_cap(ds, lambda, alphas, DEFAULT_PROJECTOR_CAP)
}

pub fn build_cache_with_cap<T: Scalar>(
    ds: &Dataset<T>,
    lambda: T,
    alphas: &AlphaVector<T>,
    projector_cap: usize,
) -> Result<RegressionCache<T>> {
    check_lambda_nonneg(lambda)?;
    if alphas.len() != ds.k() {
        return Err(LpcError::DimensionMismatch(format!(
            "{} alphas for {} clusters",
            alphas.len(),
            ds.k()
        )));
    }
    // Re-validate in case the vector was built elsewhere.
    let alphas = AlphaVector::new(alphas.as_slice().to_vec())?;
    let gram = ds.gram();

    let mut distinct: Vec<T> = Vec::new();
    let mut inverse_of = Vec::with_capacity(alphas.len());
    for &a in alphas.as_slice() {
        let idx = match distinct.iter().position(|&d| d == a) {
            Some(idx) => idx,
            None => {
                distinct.push(a);
                distinct.len() - 1
            }
        };
        inverse_of.push(idx);
    }
    let inverses = distinct
        .iter()
        .map(|&a| {
            let mut m = gram.mapv(|g| g * a);
            linalg::add_diagonal(&mut m, lambda);
            Ok(Cholesky::factor(m.view())?.inverse())
        })
        .collect::<Result<Vec<_>>>()?;

    let projector = (inverses.len() == 1 && ds.n() <= projector_cap).then(|| projector_matrix(ds, &inverses[0]));

    Ok(RegressionCache {
        gram,
        lambda,
        alphas,
        inverses,
        inverse_of,
        projector,
        projector_cap,
        n: ds.n(),
    })
}

/// `X A Xᵀ`, symmetrized.
fn projector_matrix<T: Scalar>(ds: &Dataset<T>, a: &Array2<T>) -> Array2<T> {
    let x = ds.features();
    let xa = x.dot(a);
    let mut p = xa.dot(&x.t());
    linalg::symmetrize(&mut p);
    p
}

/// Approximated coefficients `w*_k = A*_k XᵀZ_k y`.
pub fn w_star<T: Scalar>(cache: &RegressionCache<T>, ds: &Dataset<T>, asg: &Assignment) -> Result<CoefficientSet<T>> {
    cache.check_matches(ds)?;
    check_assignment(ds, asg)?;
    let stats = ClusterStats::per_cluster(ds, asg);
    let coefficients = stats
        .iter()
        .enumerate()
        .map(|(k, s)| cache.w_star_from_xty(k, s.xty.view()))
        .collect();
    CoefficientSet::new(coefficients, cache.lambda(), CoefKind::Approximated)
}

/// Gain matrices of the quadratic reduction: `q_ij = y_i y_j (X A* Xᵀ)_ij`.
/// With unequal `α` there is one matrix per cluster.
#[derive(Debug, Clone)]
pub struct QpboInstance<T: Scalar = f64> {
    gains: Vec<Array2<T>>,
    k: usize,
}

impl<T: Scalar> QpboInstance<T> {
    /// Builds an instance from explicit gain matrices: one shared matrix, or
    /// one per cluster.
    pub fn from_gains(gains: Vec<Array2<T>>, k: usize) -> Result<Self> {
        if gains.is_empty() || (gains.len() != 1 && gains.len() != k) {
            return Err(LpcError::DimensionMismatch(format!(
                "{} gain matrices for {} clusters",
                gains.len(),
                k
            )));
        }
        let n = gains[0].nrows();
        if gains.iter().any(|g| g.nrows() != n || g.ncols() != n) {
            return Err(LpcError::DimensionMismatch("gain matrices must be square and equal-sized".into()));
        }
        Ok(Self { gains, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.gains[0].nrows()
    }

    pub fn is_shared(&self) -> bool {
        self.gains.len() == 1
    }

    /// Gain matrix used by cluster `c`.
    pub fn gain(&self, c: usize) -> &Array2<T> {
        if self.is_shared() {
            &self.gains[0]
        } else {
            &self.gains[c]
        }
    }

    pub fn gains(&self) -> &[Array2<T>] {
        &self.gains
    }
}

/// Builds the quadratic gain matrix (or matrices) from the cache.
pub fn build_qpbo<T: Scalar>(cache: &RegressionCache<T>, ds: &Dataset<T>) -> Result<QpboInstance<T>> {
    cache.check_matches(ds)?;
    let n = ds.n();
    if n > cache.projector_cap() {
        return Err(LpcError::ProjectorTooLarge {
            n,
            cap: cache.projector_cap(),
        });
    }
    let y = ds.targets();
    let scale = |mut p: Array2<T>| {
        for (i, mut row) in p.axis_iter_mut(Axis(0)).enumerate() {
            let yi = y[i];
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * yi * y[j];
            }
        }
        p
    };
    let gains = if cache.distinct_inverses() == 1 {
        let p = match cache.projector() {
            Some(p) => p.clone(),
            None => projector_matrix(ds, cache.a_star(0)),
        };
        vec![scale(p)]
    } else {
        (0..cache.k())
            .map(|k| scale(projector_matrix(ds, cache.a_star(k))))
            .collect()
    };
    QpboInstance::from_gains(gains, cache.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ds(features: Array2<f64>, targets: Array1<f64>, k: usize) -> Dataset<f64> {
        Dataset::from_raw(features.view(), targets, k).unwrap()
    }

    #[test]
    fn interpolates_a_line_without_regularization() {
        let d = ds(array![[1.0], [2.0]], array![1.0, 2.0], 1);
        let w = ridge_fit(&d, &Assignment::single(2, 1), 0.0).unwrap();
        assert!((w.get(0)[0] - 1.0).abs() < 1e-12);
        assert!(w.get(0)[1].abs() < 1e-12);
        assert_eq!(w.kind, CoefKind::Exact);
    }

    #[test]
    fn single_sample_closed_form() {
        // ([1,1]ᵀ[1,1] + I)⁻¹ [2,2] = [[2,1],[1,2]]⁻¹ [2,2] = [2/3, 2/3].
        let d = ds(array![[1.0]], array![2.0], 1);
        let w = ridge_fit(&d, &Assignment::single(1, 1), 1.0).unwrap();
        assert!((w.get(0)[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((w.get(0)[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn heavy_regularization_shrinks_to_zero() {
        let d = ds(array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]], array![3.0, -2.0, 1.0], 1);
        let w = ridge_fit(&d, &Assignment::single(3, 1), 1e9).unwrap();
        let xty = d.features().t().dot(d.targets());
        let bound = 1e-6 * linalg::l2_norm(xty.view());
        assert!(linalg::l2_norm(w.get(0).view()) <= bound);
    }

    #[test]
    fn empty_cluster_gets_zero_vector() {
        let d = ds(array![[1.0], [2.0], [3.0]], array![1.0, 2.0, 3.0], 2);
        let asg = Assignment::new(vec![0, 0, 0], 2).unwrap();
        let w = ridge_fit(&d, &asg, 0.5).unwrap();
        assert!(w.get(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rank_deficient_cluster_without_regularization_fails() {
        let d = ds(array![[1.0], [1.0], [2.0]], array![1.0, 1.0, 2.0], 2);
        let asg = Assignment::new(vec![0, 0, 1], 2).unwrap();
        assert!(matches!(ridge_fit(&d, &asg, 0.0), Err(LpcError::NotPositiveDefinite { .. })));
        // The lenient path still produces an exact fit.
        let w = refit_lenient(&d, &asg, 0.0).unwrap();
        let pred = d.row(0).dot(w.get(0));
        assert!((pred - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bias_only_cache_is_scalar() {
        let features = Array2::<f64>::ones((2, 1));
        let d = Dataset::new(features, array![1.0, 2.0], 2).unwrap();
        let cache = build_cache(&d, 1.0, &AlphaVector::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert!((cache.a_star(0)[[0, 0]] - 0.5).abs() < 1e-15);
        assert_eq!(cache.distinct_inverses(), 1);
    }

    #[test]
    fn shared_alpha_reuses_one_inverse() {
        let d = ds(array![[1.0], [2.0], [3.0], [4.0]], array![1.0, 2.0, 3.0, 4.0], 3);
        let cache = build_cache(&d, 1.0, &AlphaVector::uniform(3)).unwrap();
        assert_eq!(cache.distinct_inverses(), 1);
        assert_eq!(cache.a_star(0), cache.a_star(2));
        let uneven = build_cache(&d, 1.0, &AlphaVector::new(vec![0.5, 0.25, 0.25]).unwrap()).unwrap();
        assert_eq!(uneven.distinct_inverses(), 2);
        assert!(uneven.projector().is_none());
    }

    #[test]
    fn singular_gram_without_regularization_fails() {
        let d = ds(array![[1.0], [1.0]], array![1.0, 2.0], 1);
        assert!(matches!(
            build_cache(&d, 0.0, &AlphaVector::uniform(1)),
            Err(LpcError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn nonpositive_alpha_rejected() {
        assert!(matches!(
            AlphaVector::<f64>::new(vec![0.5, 0.0]),
            Err(LpcError::InvalidAlpha { index: 1, .. })
        ));
    }

    #[test]
    fn single_sample_gain() {
        let d = ds(array![[2.0]], array![3.0], 1);
        let cache = build_cache(&d, 1.0, &AlphaVector::uniform(1)).unwrap();
        let q = build_qpbo(&cache, &d).unwrap();
        let x = d.row(0);
        let p = x.dot(&cache.a_star(0).dot(&x));
        assert!((q.gain(0)[[0, 0]] - 9.0 * p).abs() < 1e-12);
    }

    #[test]
    fn zero_targets_give_zero_gains() {
        let d = ds(array![[1.0], [2.0], [3.0]], array![0.0, 0.0, 0.0], 2);
        let cache = build_cache(&d, 1.0, &AlphaVector::uniform(2)).unwrap();
        let q = build_qpbo(&cache, &d).unwrap();
        assert!(q.gain(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn projector_cap_is_enforced() {
        let d = ds(array![[1.0], [2.0], [3.0]], array![1.0, 0.0, 1.0], 2);
        let cache = build_cache_with_cap(&d, 1.0, &AlphaVector::uniform(2), 2).unwrap();
        assert!(cache.projector().is_none());
        assert!(matches!(build_qpbo(&cache, &d), Err(LpcError::ProjectorTooLarge { .. })));
    }

    #[test]
    fn stats_add_remove_roundtrip() {
        let d = ds(array![[1.0, 2.0], [3.0, -1.0]], array![1.0, 2.0], 1);
        let mut s = ClusterStats::from_members(&d, &[0, 1]);
        s.remove(d.row(1), 2.0);
        let t = ClusterStats::from_members(&d, &[0]);
        assert_eq!(s.count, 1);
        for (a, b) in s.gram.iter().zip(t.gram.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s.yty - t.yty).abs() < 1e-12);
    }
}
