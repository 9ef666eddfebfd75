//! Small dense matrices and the direct methods built on them.
//!
//! Everything here is sized for the problems this crate deals with (a few
//! dozen rows at most), so the routines favour clarity over blocking or
//! cache tricks.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
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

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry (0 for a zero matrix).
    pub fn asymmetry(&self) -> T {
        assert!(self.is_square());
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    pub fn to_complex(&self) -> CMatrix<T> {
        CMatrix {
            n: self.rows,
            data: self.data.iter().map(|&v| Complex::new(v, T::zero())).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// Square complex matrix, used for characteristic-polynomial evaluation and
/// inverse iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `z I - self`
    pub fn shifted_neg(&self, z: Complex<T>) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = -*v;
        }
        for i in 0..self.n {
            out.data[i * self.n + i] += z;
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Complex<T> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = Complex::new(T::one(), T::zero());
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].norm();
            for i in k + 1..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == T::zero() {
                return Complex::new(T::zero(), T::zero());
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let d = a[k * n + k];
            det *= d;
            for i in k + 1..n {
                let factor = a[i * n + k] / d;
                if factor == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= factor * u;
                }
            }
        }
        det
    }

    /// Solves `self * x = b`, replacing exactly-zero pivots by `tiny` so that
    /// nearly singular systems (inverse iteration) still produce a direction.
    pub fn solve_regularized(&self, b: &[Complex<T>], tiny: T) -> Vec<Complex<T>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].norm();
            for i in k + 1..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                x.swap(k, piv);
            }
            if a[k * n + k].norm() <= tiny {
                a[k * n + k] = Complex::new(tiny, T::zero());
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / d;
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= factor * u;
                }
                let xk = x[k];
                x[i] -= factor * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= a[k * n + j] * x[j];
            }
            x[k] = s / a[k * n + k];
        }
        x
    }
}

/// Determinant of a real square matrix by LU with partial pivoting.
pub fn det<T: Scalar>(m: &Matrix<T>) -> T {
    assert!(m.is_square());
    let n = m.rows();
    let mut a = m.data.clone();
    let mut det = T::one();
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            if a[i * n + k].abs() > best {
                best = a[i * n + k].abs();
                piv = i;
            }
        }
        if best == T::zero() {
            return T::zero();
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[k * n + k];
        det *= d;
        for i in k + 1..n {
            let factor = a[i * n + k] / d;
            for j in k + 1..n {
                let u = a[k * n + j];
                a[i * n + j] -= factor * u;
            }
        }
    }
    det
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    /// Ascending.
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix<T>,
}

/// Cyclic Jacobi rotations. Only the lower triangle symmetry is assumed, the
/// input is symmetrized first.
pub fn symmetric_eigen<T: Scalar>(m: &Matrix<T>) -> SymmetricEigen<T> {
    assert!(m.is_square());
    let n = m.rows();
    let half = T::lit(0.5);
    let mut a = Matrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)]) * half);
    let mut v = Matrix::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..i {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= eps * eps * (diag + off) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
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
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

/// Spectral norm `||M||_2`.
pub fn spectral_norm<T: Scalar>(m: &Matrix<T>) -> T {
    if m.rows() == 0 || m.cols() == 0 {
        return T::zero();
    }
    let gram = m.transpose().matmul(m);
    let eig = symmetric_eigen(&gram);
    eig.values.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt()
}

/// Minimum-norm least-squares solution of `S x = b` for symmetric `S`,
/// via the eigen-decomposition pseudo-inverse. Eigenvalues below
/// `rtol * max|lambda|` are treated as zero; the second return value is
/// true when that happened.
pub fn symmetric_pinv_solve<T: Scalar>(s: &Matrix<T>, b: &[T], rtol: T) -> (Vec<T>, bool) {
    let n = s.rows();
    let eig = symmetric_eigen(s);
    let scale = eig.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let cutoff = rtol * scale;
    let mut x = vec![T::zero(); n];
    let mut deficient = scale == T::zero();
    for k in 0..n {
        let lam = eig.values[k];
        if lam.abs() <= cutoff || lam == T::zero() {
            deficient = true;
            continue;
        }
        let coeff: T = (0..n).map(|i| eig.vectors[(i, k)] * b[i]).sum::<T>() / lam;
        for i in 0..n {
            x[i] += coeff * eig.vectors[(i, k)];
        }
    }
    (x, deficient)
}

pub fn norm2<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&a| a * a).sum::<T>().sqrt()
}
