//! Numerical property suite: identities and inequalities that must hold for
//! any objective, checked on samples.

use num_complex::Complex;
use rand::Rng;
use serde::Serialize;

use crate::classify::{find_critical_points, CriticalPointSet};
use crate::eigen::eigenvalues;
use crate::error::Result;
use crate::function::{BoxRegion, MinMaxFunction, PointXY};
use crate::linalg::{det, spectral_norm, symmetric_eigen, Matrix};
use crate::rng::substream;
use crate::spectral::{
    char_poly_identity_check, h_from_blocks, jacobian_gda, jacobian_ogda, multisets_match, ogda_eigs_from_r,
    ogda_spectrum_from_h, MATCH_TOL,
};

/// Result of one property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl PropertyOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        PropertyOutcome {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Settings of [`run_suite`].
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub alpha: f64,
    pub region: BoxRegion<f64>,
    pub seed: u64,
    /// Random points for the pointwise properties.
    pub points: usize,
    /// Random `r` for the quadratic root bound.
    pub r_samples: usize,
    /// Random step sizes for the bilinear closed form.
    pub alpha_samples: usize,
    /// Random `lambda` per critical point for the characteristic polynomial identity.
    pub lambda_samples: usize,
    /// Multistart seeds for the critical point search.
    pub search_seeds: usize,
}

impl SuiteConfig {
    pub fn new(alpha: f64, region: BoxRegion<f64>, seed: u64) -> Self {
        SuiteConfig {
            alpha,
            region,
            seed,
            points: 1000,
            r_samples: 100_000,
            alpha_samples: 1000,
            lambda_samples: 20,
            search_seeds: 200,
        }
    }
}

/// Sub-stream indices, kept apart so the properties draw independent samples.
const STREAM_ROOTS: u64 = 1 << 40;
const STREAM_ALPHAS: u64 = 2 << 40;
const STREAM_LAMBDA: u64 = 3 << 40;
const STREAM_POINTS: u64 = 4 << 40;

/// Count of `r` with `|r| < 1/2`, `|1 + r| < 1` whose quadratic has a root
/// of modulus above `1 + 1e-12`.
pub fn quadratic_root_violations(samples: usize, seed: u64) -> usize {
    let mut rng = substream(seed, STREAM_ROOTS);
    let mut violations = 0;
    let mut accepted = 0;
    while accepted < samples {
        // rejection sampling from the bounding square of |r| < 1/2
        let r = Complex::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        if !(r.norm() < 0.5 && (r + 1.0).norm() < 1.0) {
            continue;
        }
        accepted += 1;
        let (a, b) = ogda_eigs_from_r(r);
        if a.norm() > 1.0 + 1e-12 || b.norm() > 1.0 + 1e-12 {
            violations += 1;
        }
    }
    violations
}

/// The four eigenvalues of the OGDA Jacobian of `f = xy` at the origin:
/// `(1 +- sqrt(1 - 8a^2 +- 4 sqrt(4a^4 - a^2))) / 2`.
pub fn bilinear_closed_form(alpha: f64) -> [Complex<f64>; 4] {
    let a2 = alpha * alpha;
    let inner = Complex::new(4.0 * a2 * a2 - a2, 0.0).sqrt();
    let mut out = [Complex::new(0.0, 0.0); 4];
    let mut k = 0;
    for s1 in [1.0, -1.0] {
        let outer = (Complex::new(1.0 - 8.0 * a2, 0.0) + inner * (4.0 * s1)).sqrt();
        for s2 in [1.0, -1.0] {
            out[k] = (Complex::new(1.0, 0.0) + outer * s2) * 0.5;
            k += 1;
        }
    }
    out
}

/// Count of `alpha` uniform on `(0, 1/2)` for which a closed-form eigenvalue
/// has modulus above `1 + 1e-12`.
pub fn bilinear_root_violations(samples: usize, seed: u64) -> usize {
    let mut rng = substream(seed, STREAM_ALPHAS);
    (0..samples)
        .filter(|_| {
            let mut a: f64 = rng.gen_range(0.0..0.5);
            if a == 0.0 {
                a = f64::MIN_POSITIVE;
            }
            bilinear_closed_form(a).iter().any(|l| l.norm() > 1.0 + 1e-12)
        })
        .count()
}

/// Random `lambda` in the annulus `lo <= |lambda| <= hi` with `|lambda - 1/2| > gap`.
pub fn annulus_samples(count: usize, lo: f64, hi: f64, gap: f64, seed: u64, stream: u64) -> Vec<Complex<f64>> {
    let mut rng = substream(seed, stream);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r = rng.gen_range(lo..=hi);
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let l = Complex::from_polar(r, t);
        if (l - 0.5).norm() > gap {
            out.push(l);
        }
    }
    out
}

fn sample_points(region: &BoxRegion<f64>, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| region.sample(&mut substream(seed, STREAM_POINTS + i as u64)))
        .collect()
}

fn h_at(f: &MinMaxFunction<f64>, z: &[f64]) -> Matrix<f64> {
    let blocks = crate::function::HessianBlocks::split(&f.hessian_flat(z), f.n());
    h_from_blocks(&blocks)
}

/// `max Re spec(H) <= lambda_max((H + H^T)/2)` at sampled points; returns
/// the number of violations and the worst excess.
pub fn ky_fan_violations(f: &MinMaxFunction<f64>, points: &[Vec<f64>]) -> Result<(usize, f64)> {
    let mut bad = 0;
    let mut worst = f64::NEG_INFINITY;
    for z in points {
        let h = h_at(f, z);
        let s = eigenvalues(&h)?;
        let max_re = s.eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let sym = h.add(&h.transpose()).scale(0.5);
        let top = *symmetric_eigen(&sym).values.last().unwrap();
        let excess = max_re - top;
        worst = worst.max(excess);
        if excess > 1e-9 * (1.0 + h.frobenius_norm()) {
            bad += 1;
        }
    }
    Ok((bad, worst))
}

/// `rho(H) <= ||hess f||_2` at sampled points.
pub fn h_radius_violations(f: &MinMaxFunction<f64>, points: &[Vec<f64>]) -> Result<usize> {
    let mut bad = 0;
    for z in points {
        let hess = f.hessian_flat(z);
        let norm = spectral_norm(&hess);
        let rho = eigenvalues(&h_at(f, z))?.spectral_radius();
        if rho > norm * (1.0 + 1e-9) + 1e-12 {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Smallest `|det J_GDA|` over the sampled points.
pub fn min_abs_det_gda(f: &MinMaxFunction<f64>, points: &[Vec<f64>], alpha: f64) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for z in points {
        let p = PointXY::from_flat(f.n(), z.clone());
        worst = worst.min(det(&jacobian_gda(f, &p, alpha)?).abs());
    }
    Ok(worst)
}

/// `min |lambda - 1/2|` over the OGDA Jacobian spectra at the given points.
pub fn min_distance_to_half(f: &MinMaxFunction<f64>, points: &[PointXY<f64>], alpha: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for p in points {
        let s = eigenvalues(&jacobian_ogda(f, p, alpha)?)?;
        for l in &s.eigenvalues {
            best = best.min((l - 0.5).norm());
        }
    }
    Ok(best)
}

fn pass(name: &str, ok: bool, detail: String) -> PropertyOutcome {
    PropertyOutcome::new(name, ok, detail)
}

/// Runs every property for `f`. Step-size-dependent properties that are only
/// guaranteed for `alpha < 1/L` use `min(alpha, 0.5/L)` with `L` the sampled
/// bound on the region.
pub fn run_suite(f: &MinMaxFunction<f64>, cfg: &SuiteConfig) -> Result<Vec<PropertyOutcome>> {
    let mut out = Vec::new();
    let points = sample_points(&cfg.region, cfg.points, cfg.seed);
    let crit: CriticalPointSet<f64> = find_critical_points(f, &cfg.region, cfg.search_seeds, cfg.seed)?;

    let q = quadratic_root_violations(cfg.r_samples, cfg.seed);
    out.push(pass(
        "quadratic roots inside unit disk",
        q == 0,
        format!("{q} violations over {} samples of r", cfg.r_samples),
    ));
    let b = bilinear_root_violations(cfg.alpha_samples, cfg.seed);
    out.push(pass(
        "bilinear OGDA eigenvalues inside unit disk",
        b == 0,
        format!("{b} violations over {} step sizes", cfg.alpha_samples),
    ));

    let lambdas = annulus_samples(cfg.lambda_samples, 0.6, 3.0, 0.1, cfg.seed, STREAM_LAMBDA);
    let mut worst_cp = 0.0f64;
    let mut sign_only = 0;
    for p in &crit.points {
        let c = char_poly_identity_check(f, p, cfg.alpha, &lambdas)?;
        worst_cp = worst_cp.max(c.max_rel_error);
        sign_only += c.phase_only_mismatches;
    }
    out.push(pass(
        "characteristic polynomial identity",
        worst_cp <= 1e-8,
        format!(
            "max relative error {worst_cp:.3e} over {} critical points ({sign_only} sign-only mismatches)",
            crit.len()
        ),
    ));

    let mut mismatch = 0;
    for p in &crit.points {
        let direct = eigenvalues(&jacobian_ogda(f, p, cfg.alpha)?)?;
        let h = eigenvalues(&h_at(f, p.as_slice()))?;
        if !multisets_match(&direct.eigenvalues, &ogda_spectrum_from_h(&h.eigenvalues, cfg.alpha), MATCH_TOL) {
            mismatch += 1;
        }
    }
    out.push(pass(
        "OGDA spectrum equals mapped H spectrum",
        mismatch == 0,
        format!("{mismatch} mismatches over {} critical points", crit.len()),
    ));

    let half = min_distance_to_half(f, &crit.points, cfg.alpha)?;
    out.push(pass(
        "1/2 is not an OGDA eigenvalue",
        half > 1e-9,
        format!("min |lambda - 1/2| = {half:.3e}"),
    ));

    let (kf, kf_worst) = ky_fan_violations(f, &points)?;
    out.push(pass(
        "Ky Fan bound on Re spec(H)",
        kf == 0,
        format!("{kf} violations over {} points (worst excess {kf_worst:.3e})", points.len()),
    ));

    let hr = h_radius_violations(f, &points)?;
    out.push(pass(
        "rho(H) <= ||hess f||",
        hr == 0,
        format!("{hr} violations over {} points", points.len()),
    ));

    let l_hat = f.lipschitz_estimate(&cfg.region, cfg.points, cfg.seed)?;
    let a = if l_hat > 0.0 { cfg.alpha.min(0.5 / l_hat) } else { cfg.alpha };
    let d = min_abs_det_gda(f, &points, a)?;
    out.push(pass(
        "GDA map locally invertible",
        d > 1e-12,
        format!("min |det J_GDA| = {d:.3e} at alpha = {a:.3e} (L estimate {l_hat:.4})"),
    ));

    let mut unreliable = 0;
    let mut worst_res = 0.0f64;
    for z in &points {
        let p = PointXY::from_flat(f.n(), z.clone());
        for m in [jacobian_gda(f, &p, cfg.alpha)?, jacobian_ogda(f, &p, cfg.alpha)?] {
            let s = eigenvalues(&m)?;
            worst_res = worst_res.max(s.residual);
            if !s.reliable() {
                unreliable += 1;
            }
        }
    }
    out.push(pass(
        "eigensolver backward error",
        unreliable == 0,
        format!("{unreliable} unreliable spectra, worst residual {worst_res:.3e}"),
    ));
    Ok(out)
}
