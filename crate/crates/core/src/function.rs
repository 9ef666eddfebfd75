//! Min-max objectives `f(x, y)` with `x` in R^n (minimized) and `y` in R^m
//! (maximized), together with points, Hessian blocks and sampling boxes.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Matrix};
use crate::polynomial::{SparsePolynomial, Term};
use crate::rng::substream;
use crate::scalar::Scalar;

/// How the objective is represented.
#[derive(Clone, Debug, PartialEq)]
pub enum Body<T> {
    /// A single expanded polynomial.
    Polynomial(SparsePolynomial<T>),
    /// `sum_k a_k(z) * b_k(z) + rest(z)`, kept factored so that large
    /// products (e.g. a random cubic times a cubic) stay cheap to differentiate.
    ProductSum {
        pairs: Vec<(SparsePolynomial<T>, SparsePolynomial<T>)>,
        rest: SparsePolynomial<T>,
    },
}

/// A twice-differentiable objective over `n` min-variables and `m` max-variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxFunction<T> {
    n: usize,
    m: usize,
    body: Body<T>,
    label: Option<String>,
}

impl<T: Scalar> MinMaxFunction<T> {
    pub fn from_polynomial(n: usize, m: usize, poly: SparsePolynomial<T>) -> Result<Self> {
        Self::check_dims(n, m, poly.nvars())?;
        Ok(MinMaxFunction {
            n,
            m,
            body: Body::Polynomial(poly),
            label: None,
        })
    }

    pub fn from_product_sum(
        n: usize,
        m: usize,
        pairs: Vec<(SparsePolynomial<T>, SparsePolynomial<T>)>,
        rest: SparsePolynomial<T>,
    ) -> Result<Self> {
        Self::check_dims(n, m, rest.nvars())?;
        for (a, b) in &pairs {
            Self::check_dims(n, m, a.nvars())?;
            Self::check_dims(n, m, b.nvars())?;
        }
        Ok(MinMaxFunction {
            n,
            m,
            body: Body::ProductSum { pairs, rest },
            label: None,
        })
    }

    fn check_dims(n: usize, m: usize, nvars: usize) -> Result<()> {
        if n == 0 || m == 0 {
            return Err(Error::input(format!("need n >= 1 and m >= 1, got n={n}, m={m}")));
        }
        if nvars != n + m {
            return Err(Error::dim("polynomial variables", n + m, nvars));
        }
        Ok(())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn body(&self) -> &Body<T> {
        &self.body
    }

    /// Fully expanded polynomial form.
    pub fn to_polynomial(&self) -> SparsePolynomial<T> {
        match &self.body {
            Body::Polynomial(p) => p.clone(),
            Body::ProductSum { pairs, rest } => pairs
                .iter()
                .fold(rest.clone(), |acc, (a, b)| acc.add(&a.mul(b))),
        }
    }

    /// True when every term has degree exactly one in `x` and one in `y`
    /// (i.e. `f(x, y) = x^T A y`).
    pub fn is_bilinear(&self) -> bool {
        let p = self.to_polynomial();
        !p.is_zero()
            && p.terms().iter().all(|t| {
                let dx: u32 = t.exponents[..self.n].iter().sum();
                let dy: u32 = t.exponents[self.n..].iter().sum();
                dx == 1 && dy == 1
            })
    }

    fn check_point(&self, p: &PointXY<T>) -> Result<()> {
        if p.n != self.n {
            return Err(Error::dim("x block", self.n, p.n));
        }
        if p.m() != self.m {
            return Err(Error::dim("y block", self.m, p.m()));
        }
        Ok(())
    }

    /// `f` at a flat coordinate vector `(x, y)`.
    pub fn eval_flat(&self, z: &[T]) -> T {
        match &self.body {
            Body::Polynomial(p) => p.eval(z),
            Body::ProductSum { pairs, rest } => {
                pairs.iter().map(|(a, b)| a.eval(z) * b.eval(z)).sum::<T>() + rest.eval(z)
            }
        }
    }

    /// Writes `grad f(z)` into `out` (flat, `x` block first).
    pub fn gradient_flat(&self, z: &[T], out: &mut [T]) {
        debug_assert_eq!(z.len(), self.dim());
        out.iter_mut().for_each(|v| *v = T::zero());
        match &self.body {
            Body::Polynomial(p) => {
                p.accumulate_gradient(z, T::one(), out);
            }
            Body::ProductSum { pairs, rest } => {
                rest.accumulate_gradient(z, T::one(), out);
                for (a, b) in pairs {
                    let av = a.eval(z);
                    let bv = b.eval(z);
                    b.accumulate_gradient(z, av, out);
                    a.accumulate_gradient(z, bv, out);
                }
            }
        }
    }

    pub fn hessian_flat(&self, z: &[T]) -> Matrix<T> {
        let d = self.dim();
        match &self.body {
            Body::Polynomial(p) => p.hessian(z),
            Body::ProductSum { pairs, rest } => {
                let mut h = rest.hessian(z);
                for (a, b) in pairs {
                    let av = a.eval(z);
                    let bv = b.eval(z);
                    a.accumulate_hessian(z, bv, &mut h);
                    b.accumulate_hessian(z, av, &mut h);
                    let ga = a.gradient(z);
                    let gb = b.gradient(z);
                    for i in 0..d {
                        for j in 0..d {
                            h[(i, j)] += ga[i] * gb[j] + gb[i] * ga[j];
                        }
                    }
                }
                h
            }
        }
    }

    pub fn evaluate(&self, p: &PointXY<T>) -> Result<T> {
        self.check_point(p)?;
        Ok(self.eval_flat(p.as_slice()))
    }

    /// `(grad_x f, grad_y f)` at `p`.
    pub fn gradient(&self, p: &PointXY<T>) -> Result<(Vec<T>, Vec<T>)> {
        self.check_point(p)?;
        let mut g = vec![T::zero(); self.dim()];
        self.gradient_flat(p.as_slice(), &mut g);
        let gy = g.split_off(self.n);
        Ok((g, gy))
    }

    pub fn hessian(&self, p: &PointXY<T>) -> Result<HessianBlocks<T>> {
        self.check_point(p)?;
        Ok(HessianBlocks::split(&self.hessian_flat(p.as_slice()), self.n))
    }

    /// Sampled estimate of `L = sup ||hess f||_2` over `region`, times a 1.1
    /// safety factor. Not a certified bound.
    pub fn lipschitz_estimate(&self, region: &BoxRegion<T>, samples: usize, seed: u64) -> Result<T> {
        if samples == 0 {
            return Err(Error::input("lipschitz_estimate needs at least one sample"));
        }
        region.check_dim(self.dim())?;
        region.check_volume()?;
        let mut worst = T::zero();
        for i in 0..samples {
            let mut rng = substream(seed, i as u64);
            let z = region.sample(&mut rng);
            worst = worst.max(spectral_norm(&self.hessian_flat(&z)));
        }
        Ok(worst * T::lit(LIPSCHITZ_SAFETY))
    }

    pub fn cast<U: Scalar>(&self) -> MinMaxFunction<U> {
        let body = match &self.body {
            Body::Polynomial(p) => Body::Polynomial(p.cast()),
            Body::ProductSum { pairs, rest } => Body::ProductSum {
                pairs: pairs.iter().map(|(a, b)| (a.cast(), b.cast())).collect(),
                rest: rest.cast(),
            },
        };
        MinMaxFunction {
            n: self.n,
            m: self.m,
            body,
            label: self.label.clone(),
        }
    }
}

pub const LIPSCHITZ_SAFETY: f64 = 1.1;

/// A point `(x, y)`; stored flat with the `x` block first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointXY<T> {
    n: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointXY<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Self {
        let n = x.len();
        let mut coords = x;
        coords.extend(y);
        PointXY { n, coords }
    }

    /// Splits a flat vector after the first `n` entries.
    pub fn from_flat(n: usize, coords: Vec<T>) -> Self {
        assert!(n <= coords.len());
        PointXY { n, coords }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        PointXY {
            n,
            coords: vec![T::zero(); n + m],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.coords.len() - self.n
    }

    pub fn x(&self) -> &[T] {
        &self.coords[..self.n]
    }

    pub fn y(&self) -> &[T] {
        &self.coords[self.n..]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.coords
    }

    pub fn into_flat(self) -> Vec<T> {
        self.coords
    }

    pub fn norm(&self) -> T {
        crate::linalg::norm2(&self.coords)
    }

    pub fn distance(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    /// Lexicographic comparison of coordinates (NaN sorts last).
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match a.partial_cmp(b) {
                Some(std::cmp::Ordering::Equal) => continue,
                Some(o) => return o,
                None => return a.is_nan().cmp(&b.is_nan()),
            }
        }
        self.coords.len().cmp(&other.coords.len())
    }
}

/// The four blocks of `hess f`.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianBlocks<T> {
    pub xx: Matrix<T>,
    pub xy: Matrix<T>,
    pub yx: Matrix<T>,
    pub yy: Matrix<T>,
}

impl<T: Scalar> HessianBlocks<T> {
    pub fn split(full: &Matrix<T>, n: usize) -> Self {
        let d = full.rows();
        let m = d - n;
        HessianBlocks {
            xx: full.block(0, 0, n, n),
            xy: full.block(0, n, n, m),
            yx: full.block(n, 0, m, n),
            yy: full.block(n, n, m, m),
        }
    }

    pub fn n(&self) -> usize {
        self.xx.rows()
    }

    pub fn m(&self) -> usize {
        self.yy.rows()
    }

    pub fn full(&self) -> Matrix<T> {
        let (n, m) = (self.n(), self.m());
        let mut h = Matrix::zeros(n + m, n + m);
        h.set_block(0, 0, &self.xx);
        h.set_block(0, n, &self.xy);
        h.set_block(n, 0, &self.yx);
        h.set_block(n, n, &self.yy);
        h
    }

    /// True when the symmetry invariants hold to relative tolerance `tol`.
    pub fn is_symmetric(&self, tol: T) -> bool {
        let full = self.full();
        full.asymmetry() <= tol
    }
}

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> BoxRegion<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim("box bounds", lo.len(), hi.len()));
        }
        Ok(BoxRegion { lo, hi })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: T, hi: T) -> Self {
        BoxRegion {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::dim("box dimension", dim, self.dim()));
        }
        Ok(())
    }

    pub fn check_volume(&self) -> Result<()> {
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && h > l) {
                return Err(Error::input(format!("degenerate box on axis {i}: [{l}, {h}]")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, z: &[T]) -> bool {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| v >= l && v <= h)
    }

    /// Uniform sample. Draws are made in `f64` so that the stream of points
    /// is the same whatever `T` is.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<T> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| {
                let (l, h) = (l.to_f64_lossy(), h.to_f64_lossy());
                T::lit(l + (h - l) * rng.gen::<f64>())
            })
            .collect()
    }
}

/// On-disk function description: `{"n", "m", "label", "terms": [{"c", "e"}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub label: String,
    pub terms: Vec<FileTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileTerm {
    pub c: f64,
    pub e: Vec<u32>,
}

impl FunctionFile {
    pub fn from_function<T: Scalar>(f: &MinMaxFunction<T>) -> Self {
        let p = f.to_polynomial();
        FunctionFile {
            n: f.n(),
            m: f.m(),
            label: f.label().unwrap_or_default().to_string(),
            terms: p
                .terms()
                .iter()
                .map(|t| FileTerm {
                    c: t.coeff.to_f64_lossy(),
                    e: t.exponents.clone(),
                })
                .collect(),
        }
    }

    pub fn into_function<T: Scalar>(self) -> Result<MinMaxFunction<T>> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::FunctionFile(format!(
                "need n >= 1 and m >= 1, got n={}, m={}",
                self.n, self.m
            )));
        }
        let nvars = self.n + self.m;
        let terms = self
            .terms
            .into_iter()
            .map(|t| Term::new(T::lit(t.c), t.e))
            .collect();
        let poly = SparsePolynomial::new(nvars, terms)?;
        let f = MinMaxFunction::from_polynomial(self.n, self.m, poly)?;
        Ok(if self.label.is_empty() { f } else { f.with_label(self.label) })
    }

    pub fn parse<T: Scalar>(json: &str) -> Result<MinMaxFunction<T>> {
        let file: FunctionFile = serde_json::from_str(json)?;
        file.into_function()
    }

    pub fn load<T: Scalar>(path: &Path) -> Result<MinMaxFunction<T>> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("function file serializes")
    }
}
