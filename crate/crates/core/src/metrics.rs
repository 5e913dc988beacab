//! Evaluation quantities: label alignment, assignment mismatch, coefficient
//! distance, plus mean / confidence-interval summaries for repeated runs.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{LpcError, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::types::{Assignment, CoefficientSet, SolveReport};

/// Largest `K` accepted by [`align_labels`] (`K!` permutations are scanned).
pub const MAX_ALIGN_K: usize = 8;

/// Permutation `perm[predicted_label] = reference_label` maximizing the
/// number of samples whose labels agree. Ties go to the lexicographically
/// smallest permutation.
pub fn align_labels(reference: &Assignment, predicted: &Assignment) -> Result<Vec<usize>> {
    let k = reference.k().max(predicted.k());
    if k > MAX_ALIGN_K {
        return Err(LpcError::KTooLarge { k, max: MAX_ALIGN_K });
    }
    if reference.len() != predicted.len() {
        return Err(LpcError::DimensionMismatch(format!(
            "reference has {} labels, predicted has {}",
            reference.len(),
            predicted.len()
        )));
    }
    let table = contingency(reference, predicted, k);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_score = agreement(&table, &perm);
    while next_permutation(&mut perm) {
        let score = agreement(&table, &perm);
        if score > best_score {
            best_score = score;
            best.clone_from(&perm);
        }
    }
    Ok(best)
}

/// `table[p][r]` counts samples with predicted label `p` and reference `r`.
pub fn contingency(reference: &Assignment, predicted: &Assignment, k: usize) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0usize; k]; k];
    for (&r, &p) in reference.labels().iter().zip(predicted.labels()) {
        table[p][r] += 1;
    }
    table
}

fn agreement(table: &[Vec<usize>], perm: &[usize]) -> usize {
    perm.iter().enumerate().map(|(p, &r)| table[p][r]).sum()
}

/// In-place lexicographic successor; false once the last permutation is
/// reached.
fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Fraction of misassigned samples after optimal alignment. Equals
/// `(1/2N) Σ_k ‖Z_k^ref − Z'_k‖₁`.
pub fn mismatch(reference: &Assignment, predicted: &Assignment) -> Result<f64> {
    let perm = align_labels(reference, predicted)?;
    Ok(mismatch_with(reference, predicted, &perm))
}

fn mismatch_with(reference: &Assignment, predicted: &Assignment, perm: &[usize]) -> f64 {
    if reference.is_empty() {
        return 0.0;
    }
    let wrong = reference
        .labels()
        .iter()
        .zip(predicted.labels())
        .filter(|(&r, &p)| perm[p] != r)
        .count();
    wrong as f64 / reference.len() as f64
}

/// `Σ_k ‖w_ref[perm[k]] − w_pred[k]‖₂` over predicted clusters.
pub fn coefficient_distance<T: Scalar>(
    reference: &CoefficientSet<T>,
    predicted: &CoefficientSet<T>,
    alignment: &[usize],
) -> Result<T> {
    if predicted.k() > alignment.len() {
        return Err(LpcError::DimensionMismatch(format!(
            "alignment covers {} clusters, predicted has {}",
            alignment.len(),
            predicted.k()
        )));
    }
    let mut total = T::zero();
    for (p, w) in predicted.coefficients.iter().enumerate() {
        let r = alignment[p];
        let reference_w = reference.coefficients.get(r).ok_or_else(|| {
            LpcError::DimensionMismatch(format!("reference has no cluster {r}"))
        })?;
        if reference_w.len() != w.len() {
            return Err(LpcError::DimensionMismatch("coefficient vectors differ in length".into()));
        }
        total += linalg::l2_norm((reference_w - w).view());
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct EvalResult {
    /// `O' − O` against the reference objective.
    pub objective_gap: f64,
    pub mismatch_fraction: f64,
    pub coefficient_distance: f64,
    /// `alignment[predicted] = reference`.
    pub alignment: Vec<usize>,
}

/// Scores a report against reference labels and coefficients. One alignment
/// serves both the mismatch and the coefficient distance.
pub fn evaluate<T: Scalar>(
    reference_labels: &Assignment,
    reference_coefs: &CoefficientSet<T>,
    reference_objective: T,
    report: &SolveReport<T>,
) -> Result<EvalResult> {
    let alignment = align_labels(reference_labels, &report.assignment)?;
    let mismatch_fraction = mismatch_with(reference_labels, &report.assignment, &alignment);
    let coefficient_distance = coefficient_distance(reference_coefs, &report.coefficients, &alignment)?.as_f64();
    Ok(EvalResult {
        objective_gap: (report.objective - reference_objective).as_f64(),
        mismatch_fraction,
        coefficient_distance,
        alignment,
    })
}

/// Sample mean with a two-sided 95% Student-t confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub count: usize,
}

pub fn mean_ci95(values: &[f64]) -> MeanCi {
    let count = values.len();
    if count == 0 {
        return MeanCi { mean: f64::NAN, half_width: f64::NAN, count };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    if count == 1 {
        return MeanCi { mean, half_width: 0.0, count };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (count - 1) as f64)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(f64::NAN);
    MeanCi {
        mean,
        half_width: t * (var / count as f64).sqrt(),
        count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::CoefKind;
    use ndarray::array;

    fn asg(labels: &[usize], k: usize) -> Assignment {
        Assignment::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn identical_assignments_align_to_identity() {
        let a = asg(&[0, 1, 2, 1, 0], 3);
        assert_eq!(align_labels(&a, &a).unwrap(), vec![0, 1, 2]);
        assert_eq!(mismatch(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn swapped_labels_align_to_swap() {
        let a = asg(&[0, 0, 1, 1], 2);
        let b = asg(&[1, 1, 0, 0], 2);
        assert_eq!(align_labels(&a, &b).unwrap(), vec![1, 0]);
        assert_eq!(mismatch(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn one_flip_in_ten() {
        let a = asg(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2);
        let b = asg(&[0, 0, 0, 0, 1, 1, 1, 1, 1, 1], 2);
        assert!((mismatch(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        // Same value through the one-hot L1 form.
        let l1: usize = a
            .one_hot()
            .iter()
            .zip(b.one_hot().iter())
            .map(|(x, y)| (*x as i32 - *y as i32).unsigned_abs() as usize)
            .sum();
        assert!((l1 as f64 / 20.0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn too_many_clusters_rejected() {
        let a = asg(&[0; 3], 9);
        assert!(matches!(align_labels(&a, &a), Err(LpcError::KTooLarge { k: 9, .. })));
    }

    #[test]
    fn coefficient_distance_examples() {
        let w = CoefficientSet::<f64>::new(vec![array![1.0, 2.0], array![-1.0, 0.0]], 1.0, CoefKind::Refit).unwrap();
        assert_eq!(coefficient_distance(&w, &w, &[0, 1]).unwrap(), 0.0);
        let mut shifted = w.clone();
        shifted.coefficients[1][0] += 1.0;
        assert!((coefficient_distance(&w, &shifted, &[0, 1]).unwrap() - 1.0).abs() < 1e-15);
        let swapped = CoefficientSet::new(vec![array![-1.0, 0.0], array![1.0, 2.0]], 1.0, CoefKind::Refit).unwrap();
        assert_eq!(coefficient_distance(&w, &swapped, &[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn confidence_interval_matches_t_table() {
        // t_{0.975, 4} = 2.776445105...
        let ci = mean_ci95(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!((ci.mean - 3.0).abs() < 1e-15);
        let expected = 2.776_445_105_197_8 * (2.5f64 / 5.0).sqrt();
        assert!((ci.half_width - expected).abs() < 1e-9);
        assert_eq!(mean_ci95(&[7.0]).half_width, 0.0);
    }

    #[test]
    fn permutations_are_enumerated_in_order() {
        let mut v = vec![0, 1, 2];
        let mut seen = vec![v.clone()];
        while next_permutation(&mut v) {
            seen.push(v.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![0, 2, 1]);
        assert_eq!(seen[5], vec![2, 1, 0]);
    }
}
