//! Reference computations for the integration tests. Deliberately naive and
//! independent of the library's kernels.
#![allow(dead_code)]

use lpc_core::{Assignment, Dataset};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub type Mat = Vec<Vec<f64>>;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Mat, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Mat = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for j in col..=n {
            m[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in col..=n {
                        m[i][j] -= f * m[col][j];
                    }
                }
            }
        }
    }
    m.iter().map(|r| r[n]).collect()
}

pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let e: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i == j))).collect();
            gauss_solve(a, &e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

pub fn rows(ds: &Dataset<f64>) -> Vec<Vec<f64>> {
    ds.features().rows().into_iter().map(|r| r.to_vec()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_{i∈S} x_i x_iᵀ · scale + shift·I`.
fn gram(x: &[Vec<f64>], members: &[usize], scale: f64, shift: f64) -> Mat {
    let d = x[0].len();
    let mut g = vec![vec![0.0; d]; d];
    for &i in members {
        for a in 0..d {
            for b in 0..d {
                g[a][b] += x[i][a] * x[i][b] * scale;
            }
        }
    }
    for (a, row) in g.iter_mut().enumerate() {
        row[a] += shift;
    }
    g
}

fn xty(x: &[Vec<f64>], y: &[f64], members: &[usize]) -> Vec<f64> {
    let d = x[0].len();
    let mut b = vec![0.0; d];
    for &i in members {
        for a in 0..d {
            b[a] += x[i][a] * y[i];
        }
    }
    b
}

fn cluster_cost(x: &[Vec<f64>], y: &[f64], members: &[usize], w: &[f64], lambda: f64) -> f64 {
    members.iter().map(|&i| (y[i] - dot(&x[i], w)).powi(2)).sum::<f64>() + lambda * dot(w, w)
}

pub fn members(labels: &[usize], c: usize) -> Vec<usize> {
    (0..labels.len()).filter(|&i| labels[i] == c).collect()
}

/// Exact per-cluster ridge optimum for a labeling (requires `λ > 0`).
pub fn exact_cluster_objectives(ds: &Dataset<f64>, labels: &[usize], k: usize, lambda: f64) -> Vec<f64> {
    let x = rows(ds);
    let y = ds.targets().to_vec();
    (0..k)
        .map(|c| {
            let m = members(labels, c);
            let w = gauss_solve(&gram(&x, &m, 1.0, lambda), &xty(&x, &y, &m));
            cluster_cost(&x, &y, &m, &w, lambda)
        })
        .collect()
}

pub fn exact_objective(ds: &Dataset<f64>, labels: &[usize], k: usize, lambda: f64) -> f64 {
    exact_cluster_objectives(ds, labels, k, lambda).iter().sum()
}

/// `A*_c = (α_c XᵀX + λI)⁻¹`.
pub fn a_star(ds: &Dataset<f64>, alpha: f64, lambda: f64) -> Mat {
    let x = rows(ds);
    let all: Vec<usize> = (0..x.len()).collect();
    inverse(&gram(&x, &all, alpha, lambda))
}

/// Per-cluster objective under `w*_c = A*_c X_cᵀ y_c`.
pub fn approx_cluster_objectives(ds: &Dataset<f64>, labels: &[usize], alphas: &[f64], lambda: f64) -> Vec<f64> {
    let x = rows(ds);
    let y = ds.targets().to_vec();
    alphas
        .iter()
        .enumerate()
        .map(|(c, &alpha)| {
            let a = a_star(ds, alpha, lambda);
            let m = members(labels, c);
            let b = xty(&x, &y, &m);
            let w: Vec<f64> = a.iter().map(|row| dot(row, &b)).collect();
            cluster_cost(&x, &y, &m, &w, lambda)
        })
        .collect()
}

/// `Σ_k b_kᵀ A* [2I − (G_k + λI) A*] b_k` with a shared `α`.
pub fn cubic_form(ds: &Dataset<f64>, labels: &[usize], k: usize, alpha: f64, lambda: f64) -> f64 {
    let x = rows(ds);
    let y = ds.targets().to_vec();
    let a = a_star(ds, alpha, lambda);
    let d = a.len();
    let mut total = 0.0;
    for c in 0..k {
        let m = members(labels, c);
        let b = xty(&x, &y, &m);
        let g = gram(&x, &m, 1.0, lambda);
        let ab: Vec<f64> = a.iter().map(|row| dot(row, &b)).collect();
        let gab: Vec<f64> = g.iter().map(|row| dot(row, &ab)).collect();
        let agab: Vec<f64> = a.iter().map(|row| dot(row, &gab)).collect();
        let inner: Vec<f64> = (0..d).map(|i| 2.0 * ab[i] - agab[i]).collect();
        total += dot(&b, &inner);
    }
    total
}

/// Quadratic gain matrix `q_ij = y_i y_j x_iᵀ A* x_j`.
pub fn gain_matrix(ds: &Dataset<f64>, alpha: f64, lambda: f64) -> Mat {
    let x = rows(ds);
    let y = ds.targets().to_vec();
    let a = a_star(ds, alpha, lambda);
    let ax: Vec<Vec<f64>> = x.iter().map(|xi| a.iter().map(|row| dot(row, xi)).collect()).collect();
    (0..x.len())
        .map(|i| (0..x.len()).map(|j| y[i] * y[j] * dot(&x[i], &ax[j])).collect())
        .collect()
}

pub fn gain_of(q: &Mat, labels: &[usize]) -> f64 {
    let mut g = 0.0;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] == labels[j] {
                g += q[i][j];
            }
        }
    }
    g
}

/// Every labeling of `n` samples into `k` clusters.
pub fn all_labelings(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = k.pow(n as u32);
    (0..total).map(move |mut code| {
        (0..n)
            .map(|_| {
                let l = code % k;
                code /= k;
                l
            })
            .collect()
    })
}

/// Random lines-plus-noise instance: features uniform in `[-2, 2]`, each
/// sample drawn from one of `k` random lines.
pub fn random_instance(seed: u64, n: usize, d: usize, k: usize, noise: f64) -> (Dataset<f64>, Assignment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lines: Vec<Vec<f64>> = (0..k).map(|_| (0..=d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let eps = Normal::new(0.0, noise).unwrap();
    let raw = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    let y = (0..n)
        .map(|i| {
            let w = &lines[labels[i]];
            let mut v = w[d];
            for j in 0..d {
                v += w[j] * raw[[i, j]];
            }
            v + eps.sample(&mut rng)
        })
        .collect();
    (Dataset::from_raw(raw.view(), y, k).unwrap(), Assignment::new(labels, k).unwrap())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
