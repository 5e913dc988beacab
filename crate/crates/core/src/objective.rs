//! Scalar evaluators: the exact clustering objective, the approximated
//! (`w*`-substituted) objective, the quadratic and cubic surrogate forms, the
//! separability score and the approximation error bound.

use ndarray::{Array1, Array2};

use crate::error::{LpcError, Result};
use crate::linalg;
use crate::regression::{check_assignment, ClusterStats, QpboInstance, RegressionCache};
use crate::scalar::Scalar;
use crate::types::{AlphaVector, Assignment, CoefficientSet, Dataset};

/// `Σ_k ‖Z_k y − Z_k X w_k‖² + λ‖w_k‖²`, with `λ` taken from `coefs`.
pub fn evaluate_objective<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, coefs: &CoefficientSet<T>) -> Result<T> {
    check_assignment(ds, asg)?;
    if coefs.k() != asg.k() {
        return Err(LpcError::DimensionMismatch(format!(
            "{} coefficient vectors for {} clusters",
            coefs.k(),
            asg.k()
        )));
    }
    if coefs.coefficients.iter().any(|w| w.len() != ds.dim()) {
        return Err(LpcError::DimensionMismatch(format!(
            "coefficient length differs from D+1 = {}",
            ds.dim()
        )));
    }
    let mut total = T::zero();
    for (i, &l) in asg.labels().iter().enumerate() {
        let r = ds.target(i) - ds.row(i).dot(coefs.get(l));
        total += r * r;
    }
    for w in &coefs.coefficients {
        total += coefs.lambda * w.dot(w);
    }
    Ok(total)
}

/// Per-cluster terms `‖y_k − X_k w_k‖² + λ‖w_k‖²`.
pub fn cluster_objectives<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, coefs: &CoefficientSet<T>) -> Result<Vec<T>> {
    check_assignment(ds, asg)?;
    let mut out: Vec<T> = coefs.coefficients.iter().map(|w| coefs.lambda * w.dot(w)).collect();
    for (i, &l) in asg.labels().iter().enumerate() {
        let r = ds.target(i) - ds.row(i).dot(coefs.get(l));
        out[l] += r * r;
    }
    Ok(out)
}

/// The approximated objective
/// `Σ_k ‖Z_k y − Z_k X A*_k Xᵀ Z_k y‖² + λ‖A*_k Xᵀ Z_k y‖²`.
///
/// Evaluated through the projector `X A* Xᵀ` when the cache holds one, so it
/// is an independent route to `evaluate_objective(w_star(..))`.
pub fn evaluate_lpcns_objective<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, cache: &RegressionCache<T>) -> Result<T> {
    cache.check_matches(ds)?;
    check_assignment(ds, asg)?;
    let lambda = cache.lambda();
    let y = ds.targets();
    let mut total = T::zero();
    for k in 0..asg.k() {
        let members = asg.members(k);
        if members.is_empty() {
            continue;
        }
        let mut xty = Array1::<T>::zeros(ds.dim());
        for &i in &members {
            xty.scaled_add(y[i], &ds.row(i));
        }
        let w = cache.w_star_from_xty(k, xty.view());
        match cache.projector() {
            Some(p) => {
                for &i in &members {
                    let mut fit = T::zero();
                    for &j in &members {
                        fit += p[[i, j]] * y[j];
                    }
                    let r = y[i] - fit;
                    total += r * r;
                }
            }
            None => {
                let xw = ds.features().dot(&w);
                for &i in &members {
                    let r = y[i] - xw[i];
                    total += r * r;
                }
            }
        }
        total += lambda * w.dot(&w);
    }
    Ok(total)
}

/// `Σ_k z_kᵀ Q_k z_k` (to be maximized).
pub fn evaluate_qpbo_objective<T: Scalar>(instance: &QpboInstance<T>, asg: &Assignment) -> Result<T> {
    if asg.len() != instance.n() {
        return Err(LpcError::DimensionMismatch(format!(
            "assignment has {} labels for an instance of size {}",
            asg.len(),
            instance.n()
        )));
    }
    if asg.k() != instance.k() {
        return Err(LpcError::DimensionMismatch(format!(
            "assignment has k={} but instance has k={}",
            asg.k(),
            instance.k()
        )));
    }
    let mut total = T::zero();
    for k in 0..asg.k() {
        let members = asg.members(k);
        let q = instance.gain(k);
        for &i in &members {
            for &j in &members {
                total += q[[i, j]];
            }
        }
    }
    Ok(total)
}

/// The cubic maximization form obtained by expanding the square of the
/// approximated objective:
/// `Σ_k b_kᵀ A*_k [2I − (XᵀZ_kX + λI) A*_k] b_k` with `b_k = XᵀZ_k y`.
///
/// Equals `‖y‖² − evaluate_lpcns_objective` for every assignment.
pub fn evaluate_cubic_objective<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, cache: &RegressionCache<T>) -> Result<T> {
    cache.check_matches(ds)?;
    check_assignment(ds, asg)?;
    let lambda = cache.lambda();
    let mut total = T::zero();
    for (k, s) in ClusterStats::per_cluster(ds, asg).iter().enumerate() {
        let u = cache.a_star(k).dot(&s.xty);
        let mut gu = s.gram.dot(&u);
        gu.scaled_add(lambda, &u);
        total += T::lit(2.0) * s.xty.dot(&u) - u.dot(&gu);
    }
    Ok(total)
}

/// `‖α_k XᵀX − XᵀZ_kX‖₂` for every cluster.
pub fn covariance_gaps<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, alphas: &AlphaVector<T>) -> Result<Vec<T>> {
    check_assignment(ds, asg)?;
    if alphas.len() != asg.k() {
        return Err(LpcError::DimensionMismatch(format!(
            "{} alphas for {} clusters",
            alphas.len(),
            asg.k()
        )));
    }
    let gram = ds.gram();
    Ok(ClusterStats::per_cluster(ds, asg)
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let diff: Array2<T> = gram.mapv(|g| g * alphas.get(k)) - &s.gram;
            linalg::spectral_norm(diff.view())
        })
        .collect())
}

/// Separability score `Σ_k ‖α_k XᵀX − XᵀZ_kX‖₂`.
///
/// With `normalize` set the score is divided by `N` and `α_k = 1/K` is used
/// whatever `alphas` holds.
pub fn separability<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, alphas: &AlphaVector<T>, normalize: bool) -> Result<T> {
    if normalize {
        let uniform = AlphaVector::uniform(asg.k());
        let total: T = covariance_gaps(ds, asg, &uniform)?.into_iter().sum();
        Ok(total / T::from_count(ds.n()))
    } else {
        Ok(covariance_gaps(ds, asg, alphas)?.into_iter().sum())
    }
}

/// Upper bound on the objective excess caused by using `w*` instead of the
/// exact per-cluster ridge solution.
#[derive(Debug, Clone)]
pub struct BoundReport<T: Scalar = f64> {
    /// `3‖y_k‖²‖X_k‖₂²‖α_kXᵀX − XᵀZ_kX‖₂ / (2λ²)` per cluster.
    pub per_cluster_terms: Vec<T>,
    pub total_bound: T,
    /// `‖y_k‖₂²`.
    pub target_sq_norms: Vec<T>,
    /// `‖X_k‖₂` (spectral norm of the cluster's row block).
    pub feature_norms: Vec<T>,
    /// `‖α_kXᵀX − XᵀZ_kX‖₂`.
    pub covariance_gaps: Vec<T>,
    pub lambda: T,
}

pub fn error_bound<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, alphas: &AlphaVector<T>, lambda: T) -> Result<BoundReport<T>> {
    if !(lambda > T::zero()) {
        return Err(LpcError::LambdaRequired(lambda.as_f64()));
    }
    let gaps = covariance_gaps(ds, asg, alphas)?;
    let stats = ClusterStats::per_cluster(ds, asg);
    let target_sq_norms: Vec<T> = stats.iter().map(|s| s.yty).collect();
    let feature_norms: Vec<T> = stats
        .iter()
        .map(|s| linalg::sym_psd_top_eigenvalue(s.gram.view()).sqrt())
        .collect();
    let denom = T::lit(2.0) * lambda * lambda;
    let per_cluster_terms: Vec<T> = (0..asg.k())
        .map(|k| T::lit(3.0) * target_sq_norms[k] * feature_norms[k] * feature_norms[k] * gaps[k] / denom)
        .collect();
    let total_bound = per_cluster_terms.iter().copied().sum();
    Ok(BoundReport {
        per_cluster_terms,
        total_bound,
        target_sq_norms,
        feature_norms,
        covariance_gaps: gaps,
        lambda,
    })
}

/// Measured per-cluster excess `O*_k − O_k` for a fixed assignment, where
/// `O*_k` uses `w*_k` and `O_k` the exact ridge solution.
pub fn approximation_excess<T: Scalar>(ds: &Dataset<T>, asg: &Assignment, cache: &RegressionCache<T>) -> Result<Vec<T>> {
    cache.check_matches(ds)?;
    check_assignment(ds, asg)?;
    let lambda = cache.lambda();
    ClusterStats::per_cluster(ds, asg)
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let approx = s.objective_at(cache.w_star_from_xty(k, s.xty.view()).view(), lambda);
            let exact = s.optimum(lambda)?;
            Ok(approx - exact)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{build_cache, build_qpbo, refit};
    use crate::types::CoefKind;
    use ndarray::array;

    fn two_lines() -> (Dataset<f64>, Assignment) {
        // y = x on cluster 0, y = -x + 1 on cluster 1.
        let xs = array![[0.0], [1.0], [2.0], [0.5], [1.5], [3.0]];
        let ys = array![0.0, 1.0, 2.0, 0.5, -0.5, -2.0];
        let ds = Dataset::from_raw(xs.view(), ys, 2).unwrap();
        let asg = Assignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        (ds, asg)
    }

    #[test]
    fn noiseless_lines_have_zero_objective() {
        let (ds, asg) = two_lines();
        let w = refit(&ds, &asg, 0.0).unwrap();
        assert!(evaluate_objective(&ds, &asg, &w).unwrap() < 1e-20);
    }

    #[test]
    fn zero_coefficients_give_target_energy() {
        let (ds, asg) = two_lines();
        let w = CoefficientSet::zeros(2, ds.dim(), 3.0, CoefKind::Exact);
        let yy = ds.targets().dot(ds.targets());
        assert_eq!(evaluate_objective(&ds, &asg, &w).unwrap(), yy);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (ds, asg) = two_lines();
        let w = CoefficientSet::zeros(3, ds.dim(), 1.0, CoefKind::Exact);
        assert!(matches!(evaluate_objective(&ds, &asg, &w), Err(LpcError::DimensionMismatch(_))));
    }

    #[test]
    fn zero_targets_give_zero_approximated_objective() {
        let xs = array![[1.0], [2.0], [3.0]];
        let ds = Dataset::from_raw(xs.view(), array![0.0, 0.0, 0.0], 2).unwrap();
        let cache = build_cache(&ds, 1.0, &AlphaVector::uniform(2)).unwrap();
        let asg = Assignment::new(vec![0, 1, 0], 2).unwrap();
        assert_eq!(evaluate_lpcns_objective(&ds, &asg, &cache).unwrap(), 0.0);
    }

    #[test]
    fn qpbo_special_assignments() {
        let (ds, _) = two_lines();
        let cache = build_cache(&ds, 1.0, &AlphaVector::uniform(2)).unwrap();
        let q = build_qpbo(&cache, &ds).unwrap();
        let all = Assignment::single(6, 2);
        let full_sum: f64 = q.gain(0).iter().sum();
        assert!((evaluate_qpbo_objective(&q, &all).unwrap() - full_sum).abs() < 1e-12);

        let ds6 = ds.with_k(6).unwrap();
        let cache6 = build_cache(&ds6, 1.0, &AlphaVector::uniform(6)).unwrap();
        let q6 = build_qpbo(&cache6, &ds6).unwrap();
        let each = Assignment::new((0..6).collect(), 6).unwrap();
        let trace: f64 = (0..6).map(|i| q6.gain(0)[[i, i]]).sum();
        assert!((evaluate_qpbo_objective(&q6, &each).unwrap() - trace).abs() < 1e-12);
    }

    #[test]
    fn cubic_form_complements_approximated_objective() {
        let (ds, asg) = two_lines();
        let cache = build_cache(&ds, 0.7, &AlphaVector::uniform(2)).unwrap();
        let yy = ds.targets().dot(ds.targets());
        let lhs = evaluate_cubic_objective(&ds, &asg, &cache).unwrap();
        let rhs = yy - evaluate_lpcns_objective(&ds, &asg, &cache).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * yy);
    }

    #[test]
    fn single_cluster_has_zero_separability() {
        let (ds, _) = two_lines();
        let ds1 = ds.with_k(1).unwrap();
        let asg = Assignment::single(6, 1);
        let alphas = AlphaVector::new(vec![1.0]).unwrap();
        assert!(separability(&ds1, &asg, &alphas, false).unwrap() < 1e-12);
    }

    #[test]
    fn bound_requires_lambda() {
        let (ds, asg) = two_lines();
        assert!(matches!(
            error_bound(&ds, &asg, &AlphaVector::uniform(2), 0.0),
            Err(LpcError::LambdaRequired(_))
        ));
    }

    #[test]
    fn bound_scales_with_inverse_square_lambda() {
        let (ds, asg) = two_lines();
        let a = error_bound(&ds, &asg, &AlphaVector::uniform(2), 1.0).unwrap();
        let b = error_bound(&ds, &asg, &AlphaVector::uniform(2), 2.0).unwrap();
        assert!(a.total_bound > 0.0);
        assert!((b.total_bound * 4.0 - a.total_bound).abs() <= 1e-12 * a.total_bound);
    }

    #[test]
    fn duplicated_blocks_have_zero_gap() {
        let xs: ndarray::Array2<f64> = array![[0.3, -1.0], [2.0, 0.5], [1.1, 1.7], [0.3, -1.0], [2.0, 0.5], [1.1, 1.7]];
        let ys = array![1.0, 2.0, 0.0, -1.0, 3.0, 5.0];
        let ds = Dataset::from_raw(xs.view(), ys, 2).unwrap();
        let asg = Assignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let alphas = AlphaVector::uniform(2);
        assert!(separability(&ds, &asg, &alphas, false).unwrap() < 1e-12);
        let rep = error_bound(&ds, &asg, &alphas, 1.0).unwrap();
        assert!(rep.total_bound < 1e-10);
        let cache = build_cache(&ds, 1.0, &alphas).unwrap();
        for e in approximation_excess(&ds, &asg, &cache).unwrap() {
            assert!(e.abs() < 1e-10);
        }
    }
}
