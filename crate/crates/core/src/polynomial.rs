//! Sparse multivariate polynomials with exact first and second derivatives.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// One monomial `coeff * prod_i z_i^e_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term<T> {
    pub coeff: T,
    pub exponents: Vec<u32>,
}

impl<T: Scalar> Term<T> {
    pub fn new(coeff: T, exponents: Vec<u32>) -> Self {
        Term { coeff, exponents }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Polynomial in `nvars` variables stored as canonical terms: sorted by
/// exponent vector, no duplicates, no zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsePolynomial<T> {
    nvars: usize,
    terms: Vec<Term<T>>,
    // (variable, exponent) pairs for the nonzero exponents of each term,
    // flattened; `spans[k]` indexes the slice belonging to `terms[k]`.
    factors: Vec<(usize, u32)>,
    spans: Vec<(usize, usize)>,
}

impl<T: Scalar> SparsePolynomial<T> {
    /// Builds and canonicalizes. Fails if any exponent vector has the wrong length.
    pub fn new(nvars: usize, terms: Vec<Term<T>>) -> Result<Self> {
        for (k, t) in terms.iter().enumerate() {
            if t.exponents.len() != nvars {
                return Err(Error::FunctionFile(format!(
                    "term {k}: exponent vector has length {}, expected {nvars}",
                    t.exponents.len()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::FunctionFile(format!("term {k}: non-finite coefficient")));
            }
        }
        Ok(Self::from_terms_unchecked(nvars, terms))
    }

    fn from_terms_unchecked(nvars: usize, terms: Vec<Term<T>>) -> Self {
        let mut merged: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for t in terms {
            *merged.entry(t.exponents).or_insert_with(T::zero) += t.coeff;
        }
        let terms: Vec<Term<T>> = merged
            .into_iter()
            .filter(|(_, c)| *c != T::zero())
            .map(|(exponents, coeff)| Term { coeff, exponents })
            .collect();
        let mut factors = Vec::new();
        let mut spans = Vec::with_capacity(terms.len());
        for t in &terms {
            let start = factors.len();
            for (v, &e) in t.exponents.iter().enumerate() {
                if e > 0 {
                    factors.push((v, e));
                }
            }
            spans.push((start, factors.len()));
        }
        SparsePolynomial {
            nvars,
            terms,
            factors,
            spans,
        }
    }

    pub fn zero(nvars: usize) -> Self {
        Self::from_terms_unchecked(nvars, Vec::new())
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        Self::from_terms_unchecked(nvars, vec![Term::new(c, vec![0; nvars])])
    }

    /// The polynomial `z_var`.
    pub fn variable(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Self::from_terms_unchecked(nvars, vec![Term::new(T::one(), e)])
    }

    pub fn monomial(nvars: usize, coeff: T, exponents: Vec<u32>) -> Result<Self> {
        Self::new(nvars, vec![Term::new(coeff, exponents)])
    }

    /// Re-runs canonicalization; a no-op on an already canonical value.
    pub fn canonicalize(&self) -> Self {
        Self::from_terms_unchecked(self.nvars, self.terms.clone())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    /// Degree of each term restricted to the variable range `vars`.
    pub fn partial_degrees(&self, vars: std::ops::Range<usize>) -> impl Iterator<Item = u32> + '_ {
        self.terms
            .iter()
            .map(move |t| t.exponents[vars.clone()].iter().sum())
    }

    fn term_factors(&self, k: usize) -> &[(usize, u32)] {
        let (a, b) = self.spans[k];
        &self.factors[a..b]
    }

    pub fn eval(&self, z: &[T]) -> T {
        debug_assert_eq!(z.len(), self.nvars);
        let mut total = T::zero();
        for (k, t) in self.terms.iter().enumerate() {
            let mut v = t.coeff;
            for &(var, e) in self.term_factors(k) {
                v *= z[var].powi(e as i32);
            }
            total += v;
        }
        total
    }

    /// Adds `scale * grad p(z)` into `out` and returns `p(z)`.
    pub fn accumulate_gradient(&self, z: &[T], scale: T, out: &mut [T]) -> T {
        debug_assert_eq!(z.len(), self.nvars);
        debug_assert_eq!(out.len(), self.nvars);
        let mut value = T::zero();
        for (k, t) in self.terms.iter().enumerate() {
            let fs = self.term_factors(k);
            let mut full = t.coeff;
            let mut has_zero = false;
            for &(var, e) in fs {
                let p = z[var].powi(e as i32);
                if p == T::zero() {
                    has_zero = true;
                }
                full *= p;
            }
            value += full;
            if !has_zero {
                for &(var, e) in fs {
                    // d/dz z^e * rest = e * (z^e * rest) / z
                    out[var] += scale * full * T::from_u32(e).unwrap() / z[var];
                }
            } else {
                for (j, &(var, e)) in fs.iter().enumerate() {
                    let mut d = t.coeff * T::from_u32(e).unwrap() * z[var].powi(e as i32 - 1);
                    for (i, &(v2, e2)) in fs.iter().enumerate() {
                        if i != j {
                            d *= z[v2].powi(e2 as i32);
                        }
                    }
                    out[var] += scale * d;
                }
            }
        }
        value
    }

    pub fn gradient(&self, z: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.nvars];
        self.accumulate_gradient(z, T::one(), &mut g);
        g
    }

    /// Adds `scale * hess p(z)` into `out`.
    pub fn accumulate_hessian(&self, z: &[T], scale: T, out: &mut Matrix<T>) {
        for (k, t) in self.terms.iter().enumerate() {
            let fs = self.term_factors(k);
            for (a, &(va, ea)) in fs.iter().enumerate() {
                for (b, &(vb, eb)) in fs.iter().enumerate().skip(a) {
                    let mut d = t.coeff;
                    if a == b {
                        if ea < 2 {
                            continue;
                        }
                        d *= T::from_u32(ea * (ea - 1)).unwrap() * z[va].powi(ea as i32 - 2);
                    } else {
                        d *= T::from_u32(ea).unwrap() * z[va].powi(ea as i32 - 1);
                        d *= T::from_u32(eb).unwrap() * z[vb].powi(eb as i32 - 1);
                    }
                    for (i, &(vi, ei)) in fs.iter().enumerate() {
                        if i != a && i != b {
                            d *= z[vi].powi(ei as i32);
                        }
                    }
                    out[(va, vb)] += scale * d;
                    if va != vb {
                        out[(vb, va)] += scale * d;
                    }
                }
            }
        }
    }

    pub fn hessian(&self, z: &[T]) -> Matrix<T> {
        let mut h = Matrix::zeros(self.nvars, self.nvars);
        self.accumulate_hessian(z, T::one(), &mut h);
        h
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_terms_unchecked(
            self.nvars,
            self.terms
                .iter()
                .map(|t| Term::new(t.coeff * s, t.exponents.clone()))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms_unchecked(self.nvars, terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let e = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                terms.push(Term::new(a.coeff * b.coeff, e));
            }
        }
        Self::from_terms_unchecked(self.nvars, terms)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.nvars, T::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// The polynomial `q(z) = p(z + shift)`.
    pub fn shifted(&self, shift: &[T]) -> Self {
        assert_eq!(shift.len(), self.nvars);
        let linear: Vec<Self> = (0..self.nvars)
            .map(|v| Self::variable(self.nvars, v).add(&Self::constant(self.nvars, shift[v])))
            .collect();
        let mut out = Self::zero(self.nvars);
        for t in &self.terms {
            let mut prod = Self::constant(self.nvars, t.coeff);
            for (v, &e) in t.exponents.iter().enumerate() {
                if e > 0 {
                    prod = prod.mul(&linear[v].pow(e));
                }
            }
            out = out.add(&prod);
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> SparsePolynomial<U> {
        SparsePolynomial::from_terms_unchecked(
            self.nvars,
            self.terms
                .iter()
                .map(|t| Term::new(U::lit(t.coeff.to_f64_lossy()), t.exponents.clone()))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(terms: &[(f64, &[u32])]) -> SparsePolynomial<f64> {
        let n = terms[0].1.len();
        SparsePolynomial::new(n, terms.iter().map(|(c, e)| Term::new(*c, e.to_vec())).collect()).unwrap()
    }

    #[test]
    fn canonicalization_merges_and_drops_zeros() {
        let q = p(&[(1.0, &[1, 0]), (2.0, &[0, 1]), (-1.0, &[1, 0]), (0.0, &[2, 2])]);
        assert_eq!(q.terms().len(), 1);
        assert_eq!(q.terms()[0].exponents, vec![0, 1]);
        assert_eq!(q.canonicalize(), q);
    }

    #[test]
    fn wrong_exponent_length_is_rejected() {
        let err = SparsePolynomial::new(2, vec![Term::new(1.0, vec![1, 0, 0])]).unwrap_err();
        assert!(err.to_string().contains("term 0"));
    }

    #[test]
    fn gradient_at_zero_coordinate_uses_slow_path() {
        // x^2 y at (0, 3): grad = (2xy, x^2) = (0, 0); x y at (0, 3): grad = (3, 0)
        let q = p(&[(1.0, &[1, 1])]);
        let g = q.gradient(&[0.0, 3.0]);
        assert_eq!(g, vec![3.0, 0.0]);
        let q = p(&[(1.0, &[2, 1])]);
        assert_eq!(q.gradient(&[0.0, 3.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn hessian_of_cubic() {
        // x^2 y + 3 y^3 ; H = [[2y, 2x], [2x, 18y]]
        let q = p(&[(1.0, &[2, 1]), (3.0, &[0, 3])]);
        let h = q.hessian(&[1.5, -2.0]);
        assert_relative_eq!(h[(0, 0)], -4.0);
        assert_relative_eq!(h[(0, 1)], 3.0);
        assert_relative_eq!(h[(1, 0)], 3.0);
        assert_relative_eq!(h[(1, 1)], -36.0);
    }

    #[test]
    fn shift_expands_binomially() {
        // (x + 1)^2 = x^2 + 2x + 1
        let q = p(&[(1.0, &[2])]).shifted(&[1.0]);
        let expect = p(&[(1.0, &[2]), (2.0, &[1]), (1.0, &[0])]);
        assert_eq!(q, expect);
    }
}
