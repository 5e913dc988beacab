//! Dense kernels: Cholesky factorization and solves, a pivot-dropping
//! semidefinite solve, and the power-iteration spectral norm.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{LpcError, Result};
use crate::scalar::Scalar;

/// Power iteration stops after this many products with `AᵀA`.
pub const POWER_ITERATIONS: usize = 200;
/// ... or once the Rayleigh quotient moves by less than this (relative).
pub const POWER_REL_TOL: f64 = 1e-9;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T: Scalar> {
    lower: Array2<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors a symmetric positive-definite matrix. Only the lower triangle
    /// of `a` is read.
    pub fn factor(a: ArrayView2<'_, T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LpcError::DimensionMismatch(format!(
                "cholesky needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut l = Array2::<T>::zeros((n, n));
        // Pivots lost to cancellation count as zero.
        let scale = (0..n).map(|j| a[[j, j]].abs()).fold(T::zero(), T::max);
        let floor = scale * T::epsilon() * T::from_count(4 * n.max(1));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for m in 0..j {
                diag -= l[[j, m]] * l[[j, m]];
            }
            if !(diag > floor) || !diag.is_finite() {
                return Err(LpcError::NotPositiveDefinite {
                    pivot: j,
                    value: diag.as_f64(),
                });
            }
            let ljj = diag.sqrt();
            l[[j, j]] = ljj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for m in 0..j {
                    s -= l[[i, m]] * l[[j, m]];
                }
                l[[i, j]] = s / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &Array2<T> {
        &self.lower
    }

    /// Solves `A x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: ArrayView1<'_, T>) -> Array1<T> {
        let n = self.dim();
        let l = &self.lower;
        let mut x = b.to_owned();
        for i in 0..n {
            let mut s = x[i];
            for m in 0..i {
                s -= l[[i, m]] * x[m];
            }
            x[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for m in (i + 1)..n {
                s -= l[[m, i]] * x[m];
            }
            x[i] = s / l[[i, i]];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: ArrayView2<'_, T>) -> Array2<T> {
        let mut out = Array2::<T>::zeros(b.raw_dim());
        for (j, col) in b.axis_iter(Axis(1)).enumerate() {
            out.column_mut(j).assign(&self.solve_vec(col));
        }
        out
    }

    /// `A⁻¹`, symmetrized.
    pub fn inverse(&self) -> Array2<T> {
        let n = self.dim();
        let mut inv = self.solve_mat(Array2::<T>::eye(n).view());
        symmetrize(&mut inv);
        inv
    }
}

/// Solves `A X = B` for symmetric positive-definite `A`.
///
/// Fails with [`LpcError::NotPositiveDefinite`] as soon as a pivot is not
/// strictly positive, which is what happens for `λ = 0` on rank-deficient
/// data.
pub fn cholesky_solve<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Result<Array2<T>> {
    if b.nrows() != a.nrows() {
        return Err(LpcError::DimensionMismatch(format!(
            "right-hand side has {} rows, matrix has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    Ok(Cholesky::factor(a)?.solve_mat(b))
}

/// Solves `A x = b` for symmetric positive-semidefinite `A` with `b` in the
/// range of `A`. Pivots below `rel_tol · max(diag A)` are dropped and the
/// matching solution components set to zero, which yields one exact
/// least-squares solution when `A = XᵀX`, `b = Xᵀy`.
pub fn solve_psd<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView1<'_, T>, rel_tol: T) -> Array1<T> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[[i, i]]).fold(T::zero(), T::max);
    let cutoff = rel_tol * max_diag;
    let mut l = Array2::<T>::zeros((n, n));
    let mut kept = vec![false; n];
    for j in 0..n {
        let mut diag = a[[j, j]];
        for m in 0..j {
            diag -= l[[j, m]] * l[[j, m]];
        }
        if diag <= cutoff || diag <= T::zero() {
            continue;
        }
        kept[j] = true;
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for m in 0..j {
                s -= l[[i, m]] * l[[j, m]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    let mut x = b.to_owned();
    for i in 0..n {
        if !kept[i] {
            x[i] = T::zero();
            continue;
        }
        let mut s = x[i];
        for m in 0..i {
            s -= l[[i, m]] * x[m];
        }
        x[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        if !kept[i] {
            x[i] = T::zero();
            continue;
        }
        let mut s = x[i];
        for m in (i + 1)..n {
            s -= l[[m, i]] * x[m];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Largest singular value, by power iteration on the smaller of `AᵀA` and
/// `AAᵀ` from a deterministic all-ones start vector.
pub fn spectral_norm<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return T::zero();
    }
    let gram = if n <= m { a.t().dot(&a) } else { a.dot(&a.t()) };
    sym_psd_top_eigenvalue(gram.view()).sqrt()
}

/// Top eigenvalue of a symmetric positive-semidefinite matrix by power
/// iteration. Returns zero for the zero matrix.
pub fn sym_psd_top_eigenvalue<T: Scalar>(g: ArrayView2<'_, T>) -> T {
    let n = g.nrows();
    if n == 0 {
        return T::zero();
    }
    let scale = (0..n).map(|i| g[[i, i]].abs()).fold(T::zero(), T::max);
    if scale == T::zero() {
        return T::zero();
    }
    let negligible = scale * T::epsilon() * T::from_count(n);

    // All-ones first; unit vectors by descending diagonal if it lands in the
    // null space.
    let mut diag_order: Vec<usize> = (0..n).collect();
    diag_order.sort_by(|&i, &j| g[[j, j]].partial_cmp(&g[[i, i]]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let starts = std::iter::once(None).chain(diag_order.into_iter().map(Some));

    for start in starts {
        let mut v = match start {
            None => Array1::from_elem(n, T::one() / T::from_count(n).sqrt()),
            Some(j) => {
                let mut e = Array1::zeros(n);
                e[j] = T::one();
                e
            }
        };
        let mut w = g.dot(&v);
        let mut norm = l2_norm(w.view());
        if norm <= negligible {
            continue;
        }
        let mut rq = v.dot(&w);
        for _ in 0..POWER_ITERATIONS {
            v = &w / norm;
            w = g.dot(&v);
            norm = l2_norm(w.view());
            if norm <= negligible {
                break;
            }
            let next = v.dot(&w);
            let done = (next - rq).abs() <= T::lit(POWER_REL_TOL) * next.abs();
            rq = next;
            if done {
                break;
            }
        }
        return rq.max(T::zero());
    }
    T::zero()
}

pub fn l2_norm<T: Scalar>(v: ArrayView1<'_, T>) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn frobenius_norm<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Replaces `a` with `(a + aᵀ) / 2`.
pub fn symmetrize<T: Scalar>(a: &mut Array2<T>) {
    let n = a.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (a[[i, j]] + a[[j, i]]) * half;
            a[[i, j]] = s;
            a[[j, i]] = s;
        }
    }
}

/// Largest `|a_ij − a_ji|` relative to the largest `|a_ij|`.
pub fn asymmetry<T: Scalar>(a: ArrayView2<'_, T>) -> T {
    let n = a.nrows();
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst / scale
}

/// Adds `shift` to every diagonal entry.
pub fn add_diagonal<T: Scalar>(a: &mut Array2<T>, shift: T) {
    for i in 0..a.nrows().min(a.ncols()) {
        a[[i, i]] += shift;
    }
}
