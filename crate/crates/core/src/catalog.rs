//! Named example objectives.
//!
//! | name | objective | dims |
//! |------|-----------|------|
//! | `xy` | `x y` | 1+1 |
//! | `f1` | `-x^2/8 - y^2/2 + 0.6 x y` | 1+1 |
//! | `f2` | `x^2/2 + y^2/2 + 4 x y` | 1+1 |
//! | `w` | `sum_i x_i^2 - y_i^2` | 5+5 |
//! | `composite2d` | `f2(x,y) (x-1)^2 (y-1)^2 + f1(x-1,y-1) x^2 y^2` | 1+1 |
//! | `composite2d-printed` | `f1(x,y) (x-1)^2 (y-1)^2 + f2(x,y) x^2 y^2` | 1+1 |
//! | `planted10d[:seed]` | `p(x,y) sum_i (x_i^3 + y_i^3) + w(x,y)`, `p` a random cubic | 5+5 |
//! | `bilinear:a11,a12;a21,a22` | `x^T A y` | rows+cols |
//!
//! `composite2d` is the variant whose critical points and local behaviour
//! match the reference classification table ([`composite_reference_rows`]):
//! it behaves like `f2` at the origin and like `f1` around `(1, 1)`.
//! `composite2d-printed` is the other assignment of the two factors; it has
//! no critical point at `(1, 1)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::function::MinMaxFunction;
use crate::polynomial::{SparsePolynomial, Term};
use crate::rng::substream;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinId {
    Xy,
    F1,
    F2,
    W,
    Composite2d,
    Composite2dPrinted,
    Planted10d { seed: u64 },
    /// Row-major `A` for `x^T A y`.
    Bilinear { a: Vec<Vec<f64>> },
}

impl BuiltinId {
    /// Every fixed (parameter-free) name, plus `planted10d` at seed 0 and a
    /// square invertible bilinear game.
    pub fn catalog() -> Vec<BuiltinId> {
        vec![
            BuiltinId::Xy,
            BuiltinId::F1,
            BuiltinId::F2,
            BuiltinId::W,
            BuiltinId::Composite2d,
            BuiltinId::Composite2dPrinted,
            BuiltinId::Planted10d { seed: 0 },
            BuiltinId::Bilinear {
                a: vec![vec![1.0, 2.0], vec![-1.0, 1.0]],
            },
        ]
    }
}

impl fmt::Display for BuiltinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinId::Xy => write!(f, "xy"),
            BuiltinId::F1 => write!(f, "f1"),
            BuiltinId::F2 => write!(f, "f2"),
            BuiltinId::W => write!(f, "w"),
            BuiltinId::Composite2d => write!(f, "composite2d"),
            BuiltinId::Composite2dPrinted => write!(f, "composite2d-printed"),
            BuiltinId::Planted10d { seed } => write!(f, "planted10d:{seed}"),
            BuiltinId::Bilinear { a } => {
                let rows: Vec<String> = a
                    .iter()
                    .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                write!(f, "bilinear:{}", rows.join(";"))
            }
        }
    }
}

impl FromStr for BuiltinId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let id = match (head, arg) {
            ("xy", None) => BuiltinId::Xy,
            ("f1", None) => BuiltinId::F1,
            ("f2", None) => BuiltinId::F2,
            ("w", None) => BuiltinId::W,
            ("composite2d", None) => BuiltinId::Composite2d,
            ("composite2d-printed", None) => BuiltinId::Composite2dPrinted,
            ("planted10d", None) => BuiltinId::Planted10d { seed: 0 },
            ("planted10d", Some(seed)) => BuiltinId::Planted10d {
                seed: seed
                    .parse()
                    .map_err(|_| Error::input(format!("bad planted10d seed '{seed}'")))?,
            },
            ("bilinear", Some(spec)) => BuiltinId::Bilinear { a: parse_matrix(spec)? },
            _ => return Err(Error::input(format!("unknown builtin function '{s}'"))),
        };
        Ok(id)
    }
}

fn parse_matrix(spec: &str) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = spec
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::input(format!("bad matrix entry '{v}'")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::input(format!("bilinear matrix '{spec}' is empty or ragged")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::input("bilinear matrix has non-finite entries"));
    }
    Ok(rows)
}

/// Builds a named objective.
pub fn builtin<T: Scalar>(id: &BuiltinId) -> Result<MinMaxFunction<T>> {
    let f = match id {
        BuiltinId::Xy => MinMaxFunction::from_polynomial(1, 1, xy_poly())?,
        BuiltinId::F1 => MinMaxFunction::from_polynomial(1, 1, f1_poly())?,
        BuiltinId::F2 => MinMaxFunction::from_polynomial(1, 1, f2_poly())?,
        BuiltinId::W => MinMaxFunction::from_polynomial(5, 5, w_poly(5))?,
        BuiltinId::Composite2d => {
            // f2(x, y) (x-1)^2 (y-1)^2 + f1(x-1, y-1) x^2 y^2
            let one = [-T::one(), -T::one()];
            let bump_at_one = poly2(&[(1.0, [2, 2])]).shifted(&one);
            let bump_at_zero = poly2(&[(1.0, [2, 2])]);
            let p = f2_poly()
                .mul(&bump_at_one)
                .add(&f1_poly().shifted(&one).mul(&bump_at_zero));
            MinMaxFunction::from_polynomial(1, 1, p)?
        }
        BuiltinId::Composite2dPrinted => {
            let one = [-T::one(), -T::one()];
            let bump_at_one = poly2(&[(1.0, [2, 2])]).shifted(&one);
            let bump_at_zero = poly2(&[(1.0, [2, 2])]);
            let p = f1_poly().mul(&bump_at_one).add(&f2_poly().mul(&bump_at_zero));
            MinMaxFunction::from_polynomial(1, 1, p)?
        }
        BuiltinId::Planted10d { seed } => planted(5, *seed)?,
        BuiltinId::Bilinear { a } => bilinear(a)?,
    };
    Ok(f.with_label(id.to_string()))
}

/// Parses and builds in one step.
pub fn builtin_by_name<T: Scalar>(name: &str) -> Result<MinMaxFunction<T>> {
    builtin(&name.parse()?)
}

fn poly2<T: Scalar>(terms: &[(f64, [u32; 2])]) -> SparsePolynomial<T> {
    SparsePolynomial::new(
        2,
        terms.iter().map(|(c, e)| Term::new(T::lit(*c), e.to_vec())).collect(),
    )
    .expect("static two-variable polynomial")
}

fn xy_poly<T: Scalar>() -> SparsePolynomial<T> {
    poly2(&[(1.0, [1, 1])])
}

fn f1_poly<T: Scalar>() -> SparsePolynomial<T> {
    poly2(&[(-0.125, [2, 0]), (-0.5, [0, 2]), (0.6, [1, 1])])
}

fn f2_poly<T: Scalar>() -> SparsePolynomial<T> {
    poly2(&[(0.5, [2, 0]), (0.5, [0, 2]), (4.0, [1, 1])])
}

/// `sum_i x_i^2 - y_i^2` over `k` + `k` variables.
fn w_poly<T: Scalar>(k: usize) -> SparsePolynomial<T> {
    let d = 2 * k;
    let terms = (0..d)
        .map(|v| {
            let mut e = vec![0; d];
            e[v] = 2;
            Term::new(if v < k { T::one() } else { -T::one() }, e)
        })
        .collect();
    SparsePolynomial::new(d, terms).expect("w has consistent exponents")
}

/// All exponent vectors over `d` variables with total degree `<= max_deg`,
/// ordered by degree, then lexicographically by the sorted variable tuple.
fn monomials_up_to(d: usize, max_deg: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, start: usize, left: u32, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for v in start..d {
            cur.push(v);
            rec(d, v, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut tuples = Vec::new();
    for deg in 0..=max_deg {
        rec(d, 0, deg, &mut Vec::new(), &mut tuples);
    }
    tuples
        .into_iter()
        .map(|t| {
            let mut e = vec![0; d];
            for v in t {
                e[v] += 1;
            }
            e
        })
        .collect()
}

/// `p(z) * sum_i z_i^3 + w(z)` with `p` a cubic whose coefficients are iid
/// uniform on `[-1, 1]`, drawn from `seed`.
fn planted<T: Scalar>(k: usize, seed: u64) -> Result<MinMaxFunction<T>> {
    let d = 2 * k;
    let mut rng = substream(seed, 0);
    let p_terms: Vec<Term<T>> = monomials_up_to(d, 3)
        .into_iter()
        .map(|e| Term::new(T::lit(rng.gen_range(-1.0..=1.0)), e))
        .collect();
    let p = SparsePolynomial::new(d, p_terms)?;
    let cubes = SparsePolynomial::new(
        d,
        (0..d)
            .map(|v| {
                let mut e = vec![0; d];
                e[v] = 3;
                Term::new(T::one(), e)
            })
            .collect(),
    )?;
    MinMaxFunction::from_product_sum(k, k, vec![(p, cubes)], w_poly(k))
}

fn bilinear<T: Scalar>(a: &[Vec<f64>]) -> Result<MinMaxFunction<T>> {
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    let d = n + m;
    let mut terms = Vec::new();
    for (i, row) in a.iter().enumerate() {
        if row.len() != m {
            return Err(Error::input("bilinear matrix is ragged"));
        }
        for (j, &v) in row.iter().enumerate() {
            let mut e = vec![0; d];
            e[i] = 1;
            e[n + j] = 1;
            terms.push(Term::new(T::lit(v), e));
        }
    }
    MinMaxFunction::from_polynomial(n, m, SparsePolynomial::new(d, terms)?)
}

/// One row of the published summary for `composite2d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceRow {
    pub point: [f64; 2],
    pub gda_stable: bool,
    pub ogda_stable: bool,
    pub local_minmax: bool,
    pub value: f64,
    pub gda_probability: f64,
    pub ogda_probability: f64,
}

/// Published classification of the five critical points of `composite2d`.
/// The interior point is only given to four decimals.
pub fn composite_reference_rows() -> Vec<ReferenceRow> {
    let row = |p: [f64; 2], g, o, l, v, pg, po| ReferenceRow {
        point: p,
        gda_stable: g,
        ogda_stable: o,
        local_minmax: l,
        value: v,
        gda_probability: pg,
        ogda_probability: po,
    };
    vec![
        row([0.0, 0.0], false, true, false, 0.0, 0.0, 0.258),
        row([0.0, 1.0], false, false, false, 0.0, 0.0, 0.0),
        row([1.0, 0.0], true, true, true, 0.0, 0.78, 0.354),
        row([1.0, 1.0], true, true, false, 0.0, 0.19, 0.29),
        row([0.3301, 0.3357], false, false, false, 0.109, 0.0, 0.0),
    ]
}
