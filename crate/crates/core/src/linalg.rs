//! Small dense linear algebra: row-major matrices, Householder least squares,
//! cyclic Jacobi symmetric eigendecomposition and one-sided Jacobi singular
//! values. Problem sizes here are tiny (at most a few hundred rows, tens of
//! columns) so the routines favor accuracy and determinism over blocking.

use std::ops::{Index, IndexMut};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major storage. Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(r);
                for (d, &o) in dst.iter_mut().zip(orow) {
                    *d = *d + a * o;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// `selfᵀ v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len(), "tr_mul_vec shape mismatch");
        let mut out = vec![T::zero(); self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o = *o + a * vr;
            }
        }
        out
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |r, c| self[(r, cols[c])])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Householder QR factorization of an `m × n` matrix with `m ≥ n`.
#[derive(Debug, Clone)]
pub struct Qr<T> {
    /// Reduced matrix; the upper triangle holds `R`.
    reduced: Matrix<T>,
    reflectors: Vec<Option<Vec<T>>>,
    col_norms: Vec<T>,
}

impl<T: Real> Qr<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        let (m, n) = (a.rows(), a.cols());
        assert!(m >= n, "QR needs at least as many rows as columns");
        let col_norms = (0..n).map(|c| norm(&a.column(c))).collect();
        let mut r = a.clone();
        let mut reflectors = Vec::with_capacity(n);
        for k in 0..n {
            let x: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
            let xnorm = norm(&x);
            if xnorm == T::zero() {
                reflectors.push(None);
                continue;
            }
            let alpha = if x[0] >= T::zero() { -xnorm } else { xnorm };
            let mut v = x;
            v[0] = v[0] - alpha;
            let vnorm = norm(&v);
            if vnorm == T::zero() {
                reflectors.push(None);
                continue;
            }
            for vi in v.iter_mut() {
                *vi = *vi / vnorm;
            }
            for c in k..n {
                let proj = (k..m).fold(T::zero(), |acc, i| acc + v[i - k] * r[(i, c)]);
                let two_proj = proj + proj;
                for i in k..m {
                    r[(i, c)] = r[(i, c)] - two_proj * v[i - k];
                }
            }
            reflectors.push(Some(v));
        }
        Self {
            reduced: r,
            reflectors,
            col_norms,
        }
    }

    pub fn r_diag(&self) -> Vec<T> {
        (0..self.reduced.cols()).map(|k| self.reduced[(k, k)]).collect()
    }

    /// Upper triangular factor `R` (`n × n`).
    pub fn r(&self) -> Matrix<T> {
        let n = self.reduced.cols();
        Matrix::from_fn(n, n, |i, j| if j >= i { self.reduced[(i, j)] } else { T::zero() })
    }

    /// Columns whose diagonal entry in `R` is negligible relative to the
    /// original column norm, i.e. (numerically) in the span of earlier columns.
    pub fn dependent_columns(&self, rel_tol: T) -> Vec<usize> {
        self.r_diag()
            .iter()
            .zip(&self.col_norms)
            .enumerate()
            .filter(|(_, (&d, &cn))| d.abs() <= rel_tol * cn || cn == T::zero())
            .map(|(k, _)| k)
            .collect()
    }

    /// Applies `Qᵀ` to `b` in place.
    pub fn apply_qt(&self, b: &mut [T]) {
        let m = self.reduced.rows();
        assert_eq!(b.len(), m, "rhs length mismatch");
        for (k, refl) in self.reflectors.iter().enumerate() {
            if let Some(v) = refl {
                let proj = (k..m).fold(T::zero(), |acc, i| acc + v[i - k] * b[i]);
                let two_proj = proj + proj;
                for i in k..m {
                    b[i] = b[i] - two_proj * v[i - k];
                }
            }
        }
    }

    /// Least-squares solution of `min ‖A x − b‖`. Assumes full column rank.
    pub fn solve_least_squares(&self, b: &[T]) -> Vec<T> {
        let n = self.reduced.cols();
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = qtb[i];
            for j in i + 1..n {
                s = s - self.reduced[(i, j)] * x[j];
            }
            x[i] = s / self.reduced[(i, i)];
        }
        x
    }
}

/// Eigenvalues (descending) and matching unit eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Only the
/// symmetric part `(A + Aᵀ)/2` is used.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> SymmetricEigen<T> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigendecomposition needs a square matrix");
    let half = T::lit(0.5);
    let mut m = Matrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)]) * half);
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    let thresh = T::epsilon() * scale;

    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= thresh || scale == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= T::epsilon() * T::lit(1e-3) * scale {
                    m[(p, q)] = T::zero();
                    m[(q, p)] = T::zero();
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (apq + apq);
                let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
                    T::one() / (theta + theta)
                } else {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps index order on exact ties
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Vec<T> {
    let (m, n) = (a.rows(), a.cols());
    let mut u = a.clone();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for k in 0..m {
                    let (up, uq) = (u[(k, p)], u[(k, q)]);
                    alpha = alpha + up * up;
                    beta = beta + uq * uq;
                    gamma = gamma + up * uq;
                }
                if gamma == T::zero() || gamma.abs() <= T::epsilon() * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let (up, uq) = (u[(k, p)], u[(k, q)]);
                    u[(k, p)] = c * up - s * uq;
                    u[(k, q)] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..n).map(|c| norm(&u.column(c))).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(seed: u64, len: usize) -> Vec<f64> {
        let mut s = seed;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn qr_least_squares_recovers_exact_solution() {
        let a = Matrix::from_row_major(5, 3, pseudo_random(3, 15));
        let x_true = [0.5, -2.0, 3.25];
        let b = a.mul_vec(&x_true);
        let x = Qr::new(&a).solve_least_squares(&b);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn qr_flags_dependent_column() {
        let mut a = Matrix::from_row_major(6, 3, pseudo_random(9, 18));
        for r in 0..6 {
            a[(r, 2)] = 2.0 * a[(r, 0)] - a[(r, 1)];
        }
        assert_eq!(Qr::new(&a).dependent_columns(1e-10), vec![2]);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let b = Matrix::from_row_major(4, 4, pseudo_random(11, 16));
        let a = b.matmul(&b.transpose());
        let eig = symmetric_eigen(&a);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let recon = eig
            .vectors
            .matmul(&Matrix::diagonal(&eig.values))
            .matmul(&eig.vectors.transpose());
        for i in 0..4 {
            for j in 0..4 {
                assert!((recon[(i, j)] - a[(i, j)]).abs() < 1e-12);
            }
        }
        let vtv = eig.vectors.transpose().matmul(&eig.vectors);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_values_of_diagonal() {
        let a = Matrix::diagonal(&[3.0, -5.0, 0.5]);
        let sv = singular_values(&a);
        assert_eq!(sv, vec![5.0, 3.0, 0.5]);
    }
}
