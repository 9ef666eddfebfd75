//! Eigenvalues of a general real square matrix.
//!
//! Pipeline: diagonal balancing (powers of two), Householder reduction to
//! upper Hessenberg form, then Francis double-shift QR with deflation. Each
//! eigenvalue gets a backward-error residual from a few steps of complex
//! inverse iteration against the original matrix.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// QR sweeps allowed per eigenvalue before giving up.
pub const MAX_ITERS_PER_EIGENVALUE: usize = 500;
/// Largest matrix accepted.
pub const MAX_DIM: usize = 64;
/// Relative residual above which a spectrum is flagged unreliable (f64).
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Imaginary parts below this (relative) are snapped to zero and conjugate
/// partners are averaged.
pub const PAIRING_TOL: f64 = 1e-10;

/// Complex eigenvalue multiset of a real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult<T> {
    pub eigenvalues: Vec<Complex<T>>,
    /// Max over eigenpairs of `||M v - lambda v|| / (||M||_F ||v||)`.
    pub residual: T,
    pub matrix_dim: usize,
    /// QR iteration finished within its budget.
    pub converged: bool,
}

impl<T: Scalar> SpectrumResult<T> {
    pub fn reliable(&self) -> bool {
        self.converged && self.residual <= residual_tol::<T>()
    }

    pub fn spectral_radius(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Errors out if the spectrum is not reliable.
    pub fn require_reliable(self) -> Result<Self> {
        if self.reliable() {
            Ok(self)
        } else {
            Err(Error::UnreliableSpectrum {
                dim: self.matrix_dim,
                residual: self.residual.to_f64_lossy(),
                converged: self.converged,
            })
        }
    }

    pub fn report(&self) -> SpectrumReport {
        SpectrumReport {
            dim: self.matrix_dim,
            eigs: self
                .eigenvalues
                .iter()
                .map(|z| ComplexValue {
                    re: z.re.to_f64_lossy(),
                    im: z.im.to_f64_lossy(),
                })
                .collect(),
            residual: self.residual.to_f64_lossy(),
            reliable: self.reliable(),
        }
    }
}

/// Threshold used by [`SpectrumResult::reliable`]; loosened for low precision types.
pub fn residual_tol<T: Scalar>() -> T {
    T::lit(RESIDUAL_TOL).max(T::epsilon() * T::lit(1e3))
}

/// JSON form: `{"dim", "eigs": [{"re", "im"}], "residual", "reliable"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub dim: usize,
    pub eigs: Vec<ComplexValue>,
    pub residual: f64,
    pub reliable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

/// All eigenvalues of `m` with multiplicity, sorted by descending modulus
/// (ties: real part, then imaginary part).
pub fn eigenvalues<T: Scalar>(m: &Matrix<T>) -> Result<SpectrumResult<T>> {
    if !m.is_square() {
        return Err(Error::input(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n > MAX_DIM {
        return Err(Error::input(format!("matrix dimension {n} exceeds {MAX_DIM}")));
    }
    if !m.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    if n == 0 {
        return Ok(SpectrumResult {
            eigenvalues: Vec::new(),
            residual: T::zero(),
            matrix_dim: 0,
            converged: true,
        });
    }

    let mut a = m.clone();
    balance(&mut a);
    hessenberg(&mut a);
    let (mut eigs, converged) = francis_qr(&a);
    symmetrize_pairs(&mut eigs);
    eigs.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let residual = if converged {
        eigs.iter()
            .map(|&lam| eigenpair_residual(m, lam))
            .fold(T::zero(), T::max)
    } else {
        T::infinity()
    };
    Ok(SpectrumResult {
        eigenvalues: eigs,
        residual,
        matrix_dim: n,
        converged,
    })
}

/// Largest eigenvalue modulus.
pub fn spectral_radius<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    Ok(eigenvalues(m)?.require_reliable()?.spectral_radius())
}

/// Scales rows/columns by powers of two so that row and column norms are
/// comparable. Similarity transform, so the spectrum is unchanged.
fn balance<T: Scalar>(a: &mut Matrix<T>) {
    let n = a.rows();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < T::lit(0.95) * s {
                done = false;
                let ginv = T::one() / f;
                for j in 0..n {
                    a[(i, j)] *= ginv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg<T: Scalar>(a: &mut Matrix<T>) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![T::zero(); n];
    for k in 0..n - 2 {
        let norm: T = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<T>().sqrt();
        if norm == T::zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = if x0 >= T::zero() { -norm } else { norm };
        for i in 0..n {
            v[i] = T::zero();
        }
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2: T = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let beta = T::lit(2.0) / vnorm2;
        // A <- (I - beta v v^T) A
        for j in 0..n {
            let s: T = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum::<T>() * beta;
            for i in k + 1..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // A <- A (I - beta v v^T)
        for i in 0..n {
            let s: T = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum::<T>() * beta;
            for j in k + 1..n {
                a[(i, j)] -= s * v[j];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = T::zero();
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. Returns the
/// eigenvalues and whether every eigenvalue converged within budget; on
/// failure the unconverged slots hold NaN.
fn francis_qr<T: Scalar>(h: &Matrix<T>) -> (Vec<Complex<T>>, bool) {
    let n = h.rows();
    // 1-based copy keeps the index arithmetic of the classic formulation readable.
    let mut a = vec![vec![T::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![T::zero(); n + 1];
    let mut wi = vec![T::zero(); n + 1];
    let mut anorm = T::zero();
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let half = T::lit(0.5);
    let mut nn = n;
    let mut t = T::zero();
    let mut converged = true;
    'outer: while nn >= 1 {
        let mut its = 0usize;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                // one root found
                wr[nn] = x + t;
                wi[nn] = T::zero();
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                // two roots found
                let p = half * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= T::zero() {
                    z = p + if p >= T::zero() { z } else { -z };
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != T::zero() {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = T::zero();
                    wi[nn] = T::zero();
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                if nn < 2 {
                    break 'outer;
                }
                nn -= 2;
                break;
            }
            if its >= MAX_ITERS_PER_EIGENVALUE {
                converged = false;
                for k in 1..=nn {
                    wr[k] = T::nan();
                    wi[k] = T::nan();
                }
                break 'outer;
            }
            if its > 0 && its.is_multiple_of(10) {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            // form shift and look for two consecutive small subdiagonal elements
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i][i - 2] = T::zero();
                if i != m + 2 {
                    a[i][i - 3] = T::zero();
                }
            }
            // double QR step on rows l..nn and columns m..nn
            for k in m..nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = T::zero();
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let norm = (p * p + q * q + r * r).sqrt();
                let s = if p >= T::zero() { norm } else { -norm };
                if s == T::zero() {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[k][k - 1] = -a[k][k - 1];
                    }
                } else {
                    a[k][k - 1] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nn {
                    let mut pp = a[k][j] + q * a[k + 1][j];
                    if k != nn - 1 {
                        pp += r * a[k + 2][j];
                        a[k + 2][j] -= pp * z;
                    }
                    a[k + 1][j] -= pp * y;
                    a[k][j] -= pp * x;
                }
                let mmin = if nn < k + 3 { nn } else { k + 3 };
                for i in l..=mmin {
                    let mut pp = x * a[i][k] + y * a[i][k + 1];
                    if k != nn - 1 {
                        pp += z * a[i][k + 2];
                        a[i][k + 2] -= pp * r;
                    }
                    a[i][k + 1] -= pp * q;
                    a[i][k] -= pp;
                }
            }
        }
    }
    let eigs = (1..=n).map(|i| Complex::new(wr[i], wi[i])).collect();
    (eigs, converged)
}

/// Snaps near-real eigenvalues onto the real axis and makes complex ones
/// exact conjugate pairs.
fn symmetrize_pairs<T: Scalar>(eigs: &mut [Complex<T>]) {
    let tol = T::lit(PAIRING_TOL);
    for z in eigs.iter_mut() {
        if z.im.abs() <= tol * (T::one() + z.norm()) {
            z.im = T::zero();
        }
    }
    let mut used = vec![false; eigs.len()];
    for i in 0..eigs.len() {
        if used[i] || eigs[i].im <= T::zero() {
            continue;
        }
        let target = eigs[i].conj();
        let mut best: Option<(usize, T)> = None;
        for j in 0..eigs.len() {
            if j == i || used[j] || eigs[j].im >= T::zero() {
                continue;
            }
            let d = (eigs[j] - target).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            let re = (eigs[i].re + eigs[j].re) * T::lit(0.5);
            let im = (eigs[i].im - eigs[j].im) * T::lit(0.5);
            eigs[i] = Complex::new(re, im);
            eigs[j] = Complex::new(re, -im);
            used[i] = true;
            used[j] = true;
        }
    }
}

/// Relative backward error `||M v - lambda v|| / (||M||_F ||v||)` for an
/// approximate eigenvector found by inverse iteration.
pub fn eigenpair_residual<T: Scalar>(m: &Matrix<T>, lambda: Complex<T>) -> T {
    let n = m.rows();
    let mnorm = m.frobenius_norm();
    if mnorm == T::zero() {
        return lambda.norm();
    }
    let shifted = m.to_complex().shifted_neg(lambda);
    let tiny = T::epsilon() * mnorm;
    // deterministic, generic starting vector
    let mut v: Vec<Complex<T>> = (0..n)
        .map(|i| Complex::new(T::one() + T::lit(0.1) * T::from_usize_lossy(i % 7), T::lit(0.01) * T::from_usize_lossy(i % 3)))
        .collect();
    let mut best = T::infinity();
    for _ in 0..3 {
        v = shifted.solve_regularized(&v, tiny);
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if !(vn.is_finite() && vn > T::zero()) {
            break;
        }
        for z in v.iter_mut() {
            *z /= vn;
        }
        let mut res = T::zero();
        for i in 0..n {
            let mut s = -lambda * v[i];
            for j in 0..n {
                s += v[j] * m[(i, j)];
            }
            res += s.norm_sqr();
        }
        best = best.min(res.sqrt() / mnorm);
    }
    best
}
