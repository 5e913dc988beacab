//! Cluster-then-regress baseline: k-means on the raw features, then a
//! per-cluster ridge fit.

use std::time::Instant;

use ndarray::{s, Array2, ArrayView1};
use rand::Rng;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::types::{Dataset, SolveReport, SolveStatus};

use super::{finalize, Draft, SolverConfig};

const LLOYD_ITERS: usize = 100;

pub fn solve_clr_baseline<T: Scalar>(ds: &Dataset<T>, config: &SolverConfig<T>) -> Result<SolveReport<T>> {
    config.validate()?;
    let started = Instant::now();
    let (labels, iters) = kmeans(ds, &mut config.restart_rng(0));
    finalize(ds, config, Draft::new(labels, SolveStatus::Heuristic, iters as u64), started)
}

fn sq_dist<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Seeded first center, farthest-point for the rest, then Lloyd steps.
fn kmeans<T: Scalar, R: Rng>(ds: &Dataset<T>, rng: &mut R) -> (Vec<usize>, usize) {
    let pts = ds.features().slice(s![.., ..ds.num_features()]);
    let (n, k) = (ds.n(), ds.k());
    let mut centers = Array2::<T>::zeros((k, pts.ncols()));
    centers.row_mut(0).assign(&pts.row(rng.random_range(0..n)));
    let mut nearest: Vec<T> = (0..n).map(|i| sq_dist(pts.row(i), centers.row(0))).collect();
    for c in 1..k {
        let mut far = 0;
        for i in 1..n {
            if nearest[i] > nearest[far] {
                far = i;
            }
        }
        centers.row_mut(c).assign(&pts.row(far));
        for i in 0..n {
            nearest[i] = nearest[i].min(sq_dist(pts.row(i), centers.row(c)));
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut iters = 0;
    while iters < LLOYD_ITERS {
        iters += 1;
        let next: Vec<usize> = (0..n)
            .map(|i| {
                let mut best = 0;
                let mut best_d = T::infinity();
                for c in 0..k {
                    let d = sq_dist(pts.row(i), centers.row(c));
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect();
        if next == labels {
            break;
        }
        labels = next;
        let mut sums = Array2::<T>::zeros(centers.dim());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            let mut row = sums.row_mut(l);
            row += &pts.row(i);
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = &sums.row(c) / T::from_count(counts[c]);
                centers.row_mut(c).assign(&mean);
            }
        }
    }
    (labels, iters)
}
