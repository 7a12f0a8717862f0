//! Dense linear algebra kernels sized for small sparse supports.
//!
//! All buffers are flat and reusable so the combinatorial search can solve
//! many systems without touching the allocator.

use crate::signal::{dot, norm_sq_slice};

/// Incremental thin QR of a column set, built by modified Gram-Schmidt.
///
/// Columns live in a flat `dim x cols` buffer (`q`, column-major) with the
/// upper-triangular factor packed column by column in `r`. Pushing a column
/// that is numerically dependent on the current span is rejected without
/// changing the factorization.
pub(crate) struct GrowingQr {
    dim: usize,
    cols: usize,
    q: Vec<f64>,
    r: Vec<f64>,
    qty: Vec<f64>,
    work: Vec<f64>,
}

impl GrowingQr {
    pub fn new(dim: usize, capacity: usize) -> Self {
        GrowingQr {
            dim,
            cols: 0,
            q: Vec::with_capacity(dim * capacity),
            r: Vec::with_capacity(capacity * (capacity + 1) / 2),
            qty: Vec::with_capacity(capacity),
            work: vec![0.0; dim],
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn clear(&mut self) {
        self.cols = 0;
        self.q.clear();
        self.r.clear();
        self.qty.clear();
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.q[j * self.dim..(j + 1) * self.dim]
    }

    /// Orthogonalizes `column` against the current basis and appends it,
    /// recording `<q_j, y>` for the registered target `y`.
    ///
    /// Returns `false` when the remainder norm falls at or below
    /// `tol * ||column||`, leaving the factorization untouched.
    pub fn try_push(&mut self, column: &[f64], y: &[f64], tol: f64) -> bool {
        debug_assert_eq!(column.len(), self.dim);
        let norm = norm_sq_slice(column).sqrt();
        self.work.copy_from_slice(column);
        let base = self.r.len();
        self.r.resize(base + self.cols + 1, 0.0);
        for j in 0..self.cols {
            let c = dot(&self.q[j * self.dim..(j + 1) * self.dim], &self.work);
            self.r[base + j] = c;
            let qj = &self.q[j * self.dim..(j + 1) * self.dim];
            for i in 0..self.dim {
                self.work[i] -= c * qj[i];
            }
        }
        let rem = norm_sq_slice(&self.work).sqrt();
        if rem <= tol * norm {
            self.r.truncate(base);
            return false;
        }
        self.r[base + self.cols] = rem;
        let inv = 1.0 / rem;
        for w in &mut self.work {
            *w *= inv;
        }
        self.q.extend_from_slice(&self.work);
        self.qty.push(dot(self.col(self.cols), y));
        self.cols += 1;
        true
    }

    /// Squared norm of the projection of the registered `y` onto the span.
    pub fn projection_gain(&self) -> f64 {
        norm_sq_slice(&self.qty)
    }

    /// Solves `R x = Q^T y` by back substitution into `out`.
    pub fn solve(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.cols);
        for i in (0..self.cols).rev() {
            let mut s = self.qty[i];
            for j in (i + 1)..self.cols {
                s -= self.r[j * (j + 1) / 2 + i] * out[j];
            }
            out[i] = s / self.r[i * (i + 1) / 2 + i];
        }
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// `a` is `n x n` row-major and is destroyed; returns `(eigenvalues, v)` with
/// eigenvectors in the columns of row-major `v`, so the input equals
/// `v diag(w) v^T`.
pub(crate) fn jacobi_eigh(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(a.len(), n * n);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let w = (0..n).map(|i| a[i * n + i]).collect();
    (w, v)
}

/// Minimum-norm least-squares solution of `A x = y` for a possibly
/// rank-deficient `dim x k` column-major `a`, via the eigendecomposition of
/// the Gram matrix. Directions with eigenvalue at or below
/// `(rank_tol)^2 * max eigenvalue` are dropped.
pub(crate) fn min_norm_ls(a: &[f64], dim: usize, k: usize, y: &[f64], rank_tol: f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), dim * k);
    debug_assert_eq!(y.len(), dim);
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let g = dot(&a[i * dim..(i + 1) * dim], &a[j * dim..(j + 1) * dim]);
            gram[i * k + j] = g;
            gram[j * k + i] = g;
        }
    }
    let aty: Vec<f64> = (0..k).map(|i| dot(&a[i * dim..(i + 1) * dim], y)).collect();
    let (w, v) = jacobi_eigh(&mut gram, k);
    let wmax = w.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = rank_tol * rank_tol * wmax;
    let mut x = vec![0.0; k];
    for j in 0..k {
        if w[j] <= cutoff {
            continue;
        }
        let mut proj = 0.0;
        for i in 0..k {
            proj += v[i * k + j] * aty[i];
        }
        let scale = proj / w[j];
        for i in 0..k {
            x[i] += scale * v[i * k + j];
        }
    }
    x
}
