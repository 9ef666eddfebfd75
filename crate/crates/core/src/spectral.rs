//! Jacobians of the GDA and OGDA update maps at fixed points, the auxiliary
//! matrix `H = diag(-I_n, I_m) hess f`, and the map between their spectra.
//!
//! At a fixed point `(x, y, x, y)` the lifted OGDA Jacobian is
//!
//! ```text
//!     | I + 2aH   -aH |
//!     |   I        0  |
//! ```
//!
//! and its characteristic polynomial factors through the GDA one:
//! `q_ogda(l) = (2l - 1)^(n+m) q_gda((l^2 + l - 1) / (2l - 1))`. Hence each
//! eigenvalue `r` of `aH` contributes the two roots of `l^2 - l(1 + 2r) + r`.

use num_complex::Complex;

use crate::eigen::{eigenvalues, SpectrumResult};
use crate::error::{Error, Result};
use crate::function::{HessianBlocks, MinMaxFunction, PointXY};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Default tolerance for matching two eigenvalue multisets.
pub const MATCH_TOL: f64 = 1e-7;

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(Error::input(format!("step size must be positive and finite, got {alpha}")));
    }
    Ok(())
}

/// `H` from Hessian blocks: `[[-xx, -xy], [yx, yy]]`.
pub fn h_from_blocks<T: Scalar>(b: &HessianBlocks<T>) -> Matrix<T> {
    let n = b.n();
    let mut h = b.full();
    for i in 0..n {
        for j in 0..h.cols() {
            h[(i, j)] = -h[(i, j)];
        }
    }
    h
}

/// `H_GDA` at `p`.
pub fn h_gda<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>) -> Result<Matrix<T>> {
    Ok(h_from_blocks(&f.hessian(p)?))
}

/// `J_GDA = I + alpha H`, assembled blockwise.
pub fn jacobian_gda<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>, alpha: T) -> Result<Matrix<T>> {
    check_alpha(alpha)?;
    let b = f.hessian(p)?;
    let (n, m) = (b.n(), b.m());
    let mut j = Matrix::zeros(n + m, n + m);
    j.set_block(0, 0, &Matrix::identity(n).sub(&b.xx.scale(alpha)));
    j.set_block(0, n, &b.xy.scale(-alpha));
    j.set_block(n, 0, &b.yx.scale(alpha));
    j.set_block(n, n, &Matrix::identity(m).add(&b.yy.scale(alpha)));
    Ok(j)
}

/// Jacobian of the lifted OGDA map at the fixed point `(p, p)`.
pub fn jacobian_ogda<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>, alpha: T) -> Result<Matrix<T>> {
    check_alpha(alpha)?;
    let b = f.hessian(p)?;
    let (n, m) = (b.n(), b.m());
    let d = n + m;
    let two_a = alpha + alpha;
    let mut j = Matrix::zeros(2 * d, 2 * d);
    // current-gradient blocks
    j.set_block(0, 0, &Matrix::identity(n).sub(&b.xx.scale(two_a)));
    j.set_block(0, n, &b.xy.scale(-two_a));
    j.set_block(n, 0, &b.yx.scale(two_a));
    j.set_block(n, n, &Matrix::identity(m).add(&b.yy.scale(two_a)));
    // previous-gradient blocks
    j.set_block(0, d, &b.xx.scale(alpha));
    j.set_block(0, d + n, &b.xy.scale(alpha));
    j.set_block(n, d, &b.yx.scale(-alpha));
    j.set_block(n, d + n, &b.yy.scale(-alpha));
    // memory slot copies the current point
    j.set_block(d, 0, &Matrix::identity(d));
    Ok(j)
}

/// Both roots of `l^2 - l (1 + 2r) + r = 0`, larger modulus first.
pub fn ogda_eigs_from_r<T: Scalar>(r: Complex<T>) -> (Complex<T>, Complex<T>) {
    let one = Complex::new(T::one(), T::zero());
    let two = T::lit(2.0);
    let b = one + r * two;
    let disc = (one + r * r * T::lit(4.0)).sqrt();
    // avoid cancellation: compute the larger root directly, the other from the product r
    let q1 = (b + disc) / two;
    let q2 = (b - disc) / two;
    let (big, small) = if q1.norm() >= q2.norm() { (q1, q2) } else { (q2, q1) };
    let small = if big.norm() > T::zero() { r / big } else { small };
    (big, small)
}

/// OGDA Jacobian spectrum predicted from the spectrum of `H`.
pub fn ogda_spectrum_from_h<T: Scalar>(h_eigs: &[Complex<T>], alpha: T) -> Vec<Complex<T>> {
    h_eigs
        .iter()
        .flat_map(|&mu| {
            let (a, b) = ogda_eigs_from_r(mu * alpha);
            [a, b]
        })
        .collect()
}

/// Greedy minimal-distance matching of two multisets. Returns the largest
/// matched distance, or `None` when the sizes differ.
pub fn multiset_distance<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Option<T> {
    if a.len() != b.len() {
        return None;
    }
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst = T::zero();
    let mut matched = 0;
    for (d, i, j) in pairs {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        worst = worst.max(d);
        matched += 1;
        if matched == a.len() {
            break;
        }
    }
    Some(worst)
}

/// True when the multisets agree to `tol`, scaled by `max(1, max |lambda|)`.
pub fn multisets_match<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>], tol: T) -> bool {
    let scale = a
        .iter()
        .chain(b)
        .fold(T::one(), |acc, z| acc.max(z.norm()));
    multiset_distance(a, b).is_some_and(|d| d <= tol * scale)
}

/// `det(l I - M)` evaluated directly.
pub fn char_poly_at<T: Scalar>(m: &Matrix<T>, lambda: Complex<T>) -> Complex<T> {
    m.to_complex().shifted_neg(lambda).det()
}

/// Result of checking the OGDA/GDA characteristic polynomial identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CharPolyCheck<T> {
    /// `max |lhs - rhs| / (1 + |lhs|)` over the samples.
    pub max_rel_error: T,
    /// `max ||lhs| - |rhs|| / (1 + |lhs|)`: agreement of magnitudes alone.
    pub max_modulus_error: T,
    /// Samples where magnitudes agree but the complex values do not (a pure
    /// sign/phase discrepancy).
    pub phase_only_mismatches: usize,
}

/// Evaluates `q_ogda(l)` and `(2l - 1)^(n+m) q_gda((l^2 + l - 1)/(2l - 1))`
/// by determinants at each sample and reports their disagreement.
pub fn char_poly_identity_check<T: Scalar>(
    f: &MinMaxFunction<T>,
    p: &PointXY<T>,
    alpha: T,
    samples: &[Complex<T>],
) -> Result<CharPolyCheck<T>> {
    let half = Complex::new(T::lit(0.5), T::zero());
    if let Some(bad) = samples.iter().find(|&&l| l == half) {
        return Err(Error::input(format!("sample lambda = {bad} is excluded (1/2)")));
    }
    let jg = jacobian_gda(f, p, alpha)?;
    let jo = jacobian_ogda(f, p, alpha)?;
    let d = f.dim() as i32;
    let one = Complex::new(T::one(), T::zero());
    let two = T::lit(2.0);
    let mut out = CharPolyCheck {
        max_rel_error: T::zero(),
        max_modulus_error: T::zero(),
        phase_only_mismatches: 0,
    };
    for &l in samples {
        let lhs = char_poly_at(&jo, l);
        let denom = l * two - one;
        let mapped = (l * l + l - one) / denom;
        let rhs = denom.powi(d) * char_poly_at(&jg, mapped);
        let scale = T::one() + lhs.norm();
        let rel = (lhs - rhs).norm() / scale;
        let modulus = (lhs.norm() - rhs.norm()).abs() / scale;
        out.max_rel_error = out.max_rel_error.max(rel);
        out.max_modulus_error = out.max_modulus_error.max(modulus);
        let tol = T::lit(1e-8);
        if rel > tol && modulus <= tol {
            out.phase_only_mismatches += 1;
        }
    }
    Ok(out)
}

/// Spectrum of `H` at `p`.
pub fn h_spectrum<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>) -> Result<SpectrumResult<T>> {
    eigenvalues(&h_gda(f, p)?)
}
