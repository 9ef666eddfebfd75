//! Critical points and their classification: local min-max status and linear
//! stability of GDA and OGDA, both at a given step size and in the small-step
//! limit.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::catalog::{composite_reference_rows, ReferenceRow};
use crate::eigen::{eigenvalues, ComplexValue, SpectrumReport, SpectrumResult};
use crate::error::{Error, Result};
use crate::function::{BoxRegion, MinMaxFunction, PointXY};
use crate::linalg::{det, norm2, spectral_norm, symmetric_eigen, symmetric_pinv_solve};
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::spectral::{h_gda, jacobian_gda, jacobian_ogda, multisets_match, ogda_eigs_from_r, ogda_spectrum_from_h, MATCH_TOL};

/// Gradient norm a point must reach to be reported as critical.
pub const REFINE_TOL: f64 = 1e-10;
/// Gradient norm accepted as "critical" by the point-level tests.
pub const CRITICAL_TOL: f64 = 1e-8;
pub const DEDUP_RADIUS: f64 = 1e-6;
/// Band around 0 for eigenvalue signs and around 1 for spectral radii.
pub const SIGN_TOL: f64 = 1e-9;
pub const ASSUMPTION1_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITERS: usize = 200;
pub const NEWTON_MAX_BACKTRACKS: usize = 30;
/// Number of halvings in the small-step OGDA sweep (`k = 0..=SWEEP_STEPS`).
pub const SWEEP_STEPS: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    No,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    MarginallyStable,
    Unstable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitStability {
    Stable,
    Unstable,
    Indeterminate,
}

macro_rules! display_as_debug {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(self, f)
            }
        }
    )*};
}
display_as_debug!(Verdict, Stability, LimitStability);

/// Deduplicated roots of `grad f` inside a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointSet<T> {
    pub points: Vec<PointXY<T>>,
    /// `||grad f||` at each point.
    pub residuals: Vec<T>,
    /// How many converged starts were merged into each point.
    pub merged_multiplicity: Vec<usize>,
    /// Points where the Newton system was rank deficient (least-squares steps).
    pub rank_deficient: Vec<bool>,
}

impl<T: Scalar> CriticalPointSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Builds a set from known points (no search).
    pub fn from_points<F: Fn(&PointXY<T>) -> T>(points: Vec<PointXY<T>>, residual: F) -> Self {
        let residuals = points.iter().map(&residual).collect();
        let k = points.len();
        CriticalPointSet {
            points,
            residuals,
            merged_multiplicity: vec![1; k],
            rank_deficient: vec![false; k],
        }
    }
}

/// Search settings for [`find_critical_points_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Random starts.
    pub seeds: usize,
    pub seed: u64,
    /// Grid points per axis; the grid is used only when `grid^dim <= max_grid_points`.
    pub grid: usize,
    pub max_grid_points: usize,
}

impl SearchConfig {
    pub fn new(seeds: usize, seed: u64) -> Self {
        SearchConfig {
            seeds,
            seed,
            grid: 21,
            max_grid_points: 2000,
        }
    }
}

fn refine_tol<T: Scalar>() -> T {
    T::lit(REFINE_TOL).max(T::epsilon() * T::lit(100.0))
}

struct NewtonOutcome<T> {
    z: Vec<T>,
    residual: T,
    deficient: bool,
}

/// Damped Newton on `grad f = 0` with backtracking on `||grad f||^2`.
fn newton<T: Scalar>(f: &MinMaxFunction<T>, start: Vec<T>) -> Option<NewtonOutcome<T>> {
    let d = f.dim();
    let tol = refine_tol::<T>();
    let mut z = start;
    let mut g = vec![T::zero(); d];
    f.gradient_flat(&z, &mut g);
    let mut gn = norm2(&g);
    let mut deficient = false;
    let mut trial = vec![T::zero(); d];
    let mut gt = vec![T::zero(); d];
    let rtol = T::epsilon() * T::lit(1e3);
    for _ in 0..NEWTON_MAX_ITERS {
        if !gn.is_finite() {
            return None;
        }
        if gn <= tol {
            break;
        }
        let h = f.hessian_flat(&z);
        let (step, def) = symmetric_pinv_solve(&h, &g, rtol);
        deficient |= def;
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_BACKTRACKS {
            for i in 0..d {
                trial[i] = z[i] - t * step[i];
            }
            f.gradient_flat(&trial, &mut gt);
            let gtn = norm2(&gt);
            if gtn.is_finite() && gtn < gn {
                accepted = true;
                break;
            }
            t *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut z, &mut trial);
        std::mem::swap(&mut g, &mut gt);
        gn = norm2(&g);
    }
    (gn <= tol).then_some(NewtonOutcome {
        z,
        residual: gn,
        deficient,
    })
}

/// Multistart damped Newton with default search settings (grid of 21 per
/// axis in low dimension plus `seeds` uniform random starts).
pub fn find_critical_points<T: Scalar>(
    f: &MinMaxFunction<T>,
    region: &BoxRegion<T>,
    seeds: usize,
    seed: u64,
) -> Result<CriticalPointSet<T>> {
    find_critical_points_with(f, region, &SearchConfig::new(seeds, seed))
}

pub fn find_critical_points_with<T: Scalar>(
    f: &MinMaxFunction<T>,
    region: &BoxRegion<T>,
    cfg: &SearchConfig,
) -> Result<CriticalPointSet<T>> {
    if cfg.seeds == 0 {
        return Err(Error::input("critical point search needs at least one seed"));
    }
    let d = f.dim();
    region.check_dim(d)?;
    region.check_volume()?;
    let mut starts: Vec<Vec<T>> = Vec::new();
    let g = cfg.grid.max(2);
    let grid_size = (g as f64).powi(d as i32);
    if grid_size <= cfg.max_grid_points as f64 {
        let total = g.pow(d as u32);
        for idx in 0..total {
            let mut rem = idx;
            let z = (0..d)
                .map(|k| {
                    let i = rem % g;
                    rem /= g;
                    let frac = T::from_usize_lossy(i) / T::from_usize_lossy(g - 1);
                    region.lo[k] + (region.hi[k] - region.lo[k]) * frac
                })
                .collect();
            starts.push(z);
        }
    }
    for i in 0..cfg.seeds {
        starts.push(region.sample(&mut substream(cfg.seed, i as u64)));
    }

    let mut found: Vec<NewtonOutcome<T>> = starts
        .into_iter()
        .filter_map(|s| newton(f, s))
        .filter(|r| region.contains(&r.z))
        .collect();
    found.sort_by(|a, b| lex(&a.z, &b.z));

    let radius = T::lit(DEDUP_RADIUS);
    let mut out = CriticalPointSet {
        points: Vec::new(),
        residuals: Vec::new(),
        merged_multiplicity: Vec::new(),
        rank_deficient: Vec::new(),
    };
    let n = f.n();
    for r in found {
        let p = PointXY::from_flat(n, r.z);
        match out.points.iter().position(|q| q.distance(&p) <= radius) {
            Some(k) => {
                out.merged_multiplicity[k] += 1;
                out.rank_deficient[k] |= r.deficient;
                if r.residual < out.residuals[k] {
                    out.residuals[k] = r.residual;
                    out.points[k] = p;
                }
            }
            None => {
                out.points.push(p);
                out.residuals.push(r.residual);
                out.merged_multiplicity.push(1);
                out.rank_deficient.push(r.deficient);
            }
        }
    }
    Ok(out)
}

fn lex<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

fn require_critical<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>) -> Result<T> {
    let (gx, gy) = f.gradient(p)?;
    let gn = (norm2(&gx).powi(2) + norm2(&gy).powi(2)).sqrt();
    if !(gn <= T::lit(CRITICAL_TOL)) {
        return Err(Error::input(format!("point is not critical: ||grad f|| = {:e}", gn.to_f64_lossy())));
    }
    Ok(gn)
}

fn block_extremes<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>) -> Result<(T, T)> {
    let h = f.hessian(p)?;
    let min_xx = symmetric_eigen(&h.xx).values[0];
    let max_yy = *symmetric_eigen(&h.yy).values.last().expect("m >= 1");
    Ok((min_xx, max_yy))
}

/// Second-order test on the diagonal Hessian blocks. Inconclusive cases are
/// resolved to `Yes` when `f` is bilinear, where `f(x*, y) = f(x*, y*) =
/// f(x, y*)` holds at every critical point.
pub fn local_minmax_test<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>) -> Result<Verdict> {
    require_critical(f, p)?;
    let (min_xx, max_yy) = block_extremes(f, p)?;
    let tol = T::lit(SIGN_TOL);
    let verdict = if min_xx > tol && max_yy < -tol {
        Verdict::Yes
    } else if min_xx < -tol || max_yy > tol {
        Verdict::No
    } else {
        Verdict::Indeterminate
    };
    if verdict == Verdict::Indeterminate && f.is_bilinear() {
        return Ok(Verdict::Yes);
    }
    Ok(verdict)
}

pub fn strongly_local_minmax_test<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>) -> Result<bool> {
    require_critical(f, p)?;
    let (min_xx, max_yy) = block_extremes(f, p)?;
    let tol = T::lit(SIGN_TOL);
    Ok(min_xx > tol && max_yy < -tol)
}

fn radius_verdict<T: Scalar>(rho: T) -> Stability {
    let tol = T::lit(SIGN_TOL);
    if rho < T::one() - tol {
        Stability::Stable
    } else if rho > T::one() + tol {
        Stability::Unstable
    } else {
        Stability::MarginallyStable
    }
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(Error::input(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(())
}

/// Verdict from `rho(J_GDA)` at step `alpha`.
pub fn gda_stability_at_alpha<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>, alpha: T) -> Result<Stability> {
    check_alpha(alpha)?;
    require_critical(f, p)?;
    let s = eigenvalues(&jacobian_gda(f, p, alpha)?)?.require_reliable()?;
    Ok(radius_verdict(s.spectral_radius()))
}

/// Verdict from `rho(J_OGDA)` at step `alpha`, cross-checked against the
/// spectrum predicted from `H`.
pub fn ogda_stability_at_alpha<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>, alpha: T) -> Result<Stability> {
    check_alpha(alpha)?;
    require_critical(f, p)?;
    let direct = eigenvalues(&jacobian_ogda(f, p, alpha)?)?.require_reliable()?;
    let h = eigenvalues(&h_gda(f, p)?)?.require_reliable()?;
    let predicted = ogda_spectrum_from_h(&h.eigenvalues, alpha);
    if !multisets_match(&direct.eigenvalues, &predicted, T::lit(MATCH_TOL)) {
        return Err(Error::Consistency(format!(
            "OGDA Jacobian spectrum disagrees with the spectrum predicted from H at alpha = {alpha}"
        )));
    }
    Ok(radius_verdict(direct.spectral_radius()))
}

/// Small-step GDA verdict read off the real parts of `spec(H)`.
pub fn gda_small_alpha_from_spectrum<T: Scalar>(eigs: &[Complex<T>]) -> LimitStability {
    let tol = T::lit(SIGN_TOL);
    let mut unstable = false;
    let mut zero = false;
    for l in eigs {
        if l.re > tol {
            unstable = true;
        } else if l.re.abs() <= tol {
            if l.im.abs() > tol {
                // |1 + a(i b)|^2 = 1 + a^2 b^2 > 1 for every a > 0
                unstable = true;
            } else {
                zero = true;
            }
        }
    }
    if unstable {
        LimitStability::Unstable
    } else if zero {
        LimitStability::Indeterminate
    } else {
        LimitStability::Stable
    }
}

pub fn gda_stability_small_alpha<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>) -> Result<LimitStability> {
    require_critical(f, p)?;
    let s = eigenvalues(&h_gda(f, p)?)?.require_reliable()?;
    Ok(gda_small_alpha_from_spectrum(&s.eigenvalues))
}

/// Largest admissible step from the strict-stability construction:
/// `min over spec(H) of -Re(l) / |l|^2`. `None` unless every eigenvalue has
/// negative real part.
pub fn gda_step_bound<T: Scalar>(eigs: &[Complex<T>]) -> Option<T> {
    let tol = T::lit(SIGN_TOL);
    let mut best: Option<T> = None;
    for l in eigs {
        if !(l.re < -tol) {
            return None;
        }
        let b = -l.re / l.norm_sqr();
        best = Some(best.map_or(b, |v: T| v.min(b)));
    }
    best
}

/// Expected small-step OGDA verdict from the signs of `Re spec(H)`.
pub fn ogda_small_alpha_expectation<T: Scalar>(eigs: &[Complex<T>]) -> LimitStability {
    let tol = T::lit(SIGN_TOL);
    if eigs.iter().any(|l| l.re > tol) {
        return LimitStability::Unstable;
    }
    let all_left_or_imaginary = eigs.iter().all(|l| l.re < -tol || l.im.abs() > tol);
    if all_left_or_imaginary {
        LimitStability::Stable
    } else {
        LimitStability::Indeterminate
    }
}

/// Detail of the geometric step sweep behind [`ogda_stability_small_alpha`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OgdaSweep<T> {
    pub beta: T,
    pub alphas: Vec<T>,
    /// Largest root magnitude of `l^2 - l(1 + 2r) + r` over `r = a spec(H)`.
    pub max_magnitude: Vec<T>,
    pub verdict: LimitStability,
}

/// Sweeps `a_k = beta 2^-k`, `k = 0..=10`, with `beta = 1/(4 L)` and
/// `L = 1.1 ||hess f(p)||_2` (`beta = 1` when the Hessian vanishes).
pub fn ogda_sweep<T: Scalar>(eigs: &[Complex<T>], hessian_norm: T) -> OgdaSweep<T> {
    let l_hat = hessian_norm * T::lit(crate::function::LIPSCHITZ_SAFETY);
    let beta = if l_hat > T::zero() {
        T::one() / (T::lit(4.0) * l_hat)
    } else {
        T::one()
    };
    let bound = T::one() + T::lit(SIGN_TOL);
    let mut alphas = Vec::new();
    let mut mags = Vec::new();
    let mut stable_count = 0;
    for k in 0..=SWEEP_STEPS {
        let a = beta * T::lit(0.5f64.powi(k as i32));
        let worst = eigs
            .iter()
            .map(|&mu| {
                let (b, s) = ogda_eigs_from_r(mu * a);
                b.norm().max(s.norm())
            })
            .fold(T::zero(), |acc, v| acc.max(v));
        if worst <= bound {
            stable_count += 1;
        }
        alphas.push(a);
        mags.push(worst);
    }
    let verdict = if stable_count == alphas.len() {
        LimitStability::Stable
    } else if stable_count == 0 {
        LimitStability::Unstable
    } else {
        LimitStability::Indeterminate
    };
    OgdaSweep {
        beta,
        alphas,
        max_magnitude: mags,
        verdict,
    }
}

pub fn ogda_stability_small_alpha<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>) -> Result<LimitStability> {
    require_critical(f, p)?;
    let hess = f.hessian(p)?.full();
    let s = eigenvalues(&h_gda(f, p)?)?.require_reliable()?;
    ogda_small_alpha_checked(&s.eigenvalues, spectral_norm(&hess))
}

fn ogda_small_alpha_checked<T: Scalar>(eigs: &[Complex<T>], hessian_norm: T) -> Result<LimitStability> {
    let sweep = ogda_sweep(eigs, hessian_norm);
    let expected = ogda_small_alpha_expectation(eigs);
    let definite = |v: LimitStability| v != LimitStability::Indeterminate;
    if definite(sweep.verdict) && definite(expected) && sweep.verdict != expected {
        return Err(Error::Consistency(format!(
            "small-step OGDA sweep says {:?} but the sign pattern of spec(H) says {:?}",
            sweep.verdict, expected
        )));
    }
    Ok(sweep.verdict)
}

/// Samples used for the Hessian invertibility check away from `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionConfig<T> {
    pub samples: usize,
    /// Half-width of the cube around `p` the samples are drawn from.
    pub radius: T,
    pub seed: u64,
}

impl<T: Scalar> Default for AssumptionConfig<T> {
    fn default() -> Self {
        AssumptionConfig {
            samples: 32,
            radius: T::one(),
            seed: 0,
        }
    }
}

/// `(assumption1, assumption2)`: the Hessian is invertible at `p` and at
/// sampled nearby points (`min |det| > 1e-10`), and `spec(H)` has no
/// eigenvalue with `|Re| <= 1e-9`.
pub fn assumption_checks<T: Scalar>(
    f: &MinMaxFunction<T>,
    p: &PointXY<T>,
    cfg: &AssumptionConfig<T>,
) -> Result<(bool, bool)> {
    let h = f.hessian(p)?.full();
    let mut min_det = det(&h).abs();
    if cfg.samples > 0 && cfg.radius > T::zero() {
        let c = p.as_slice();
        let region = BoxRegion::new(
            c.iter().map(|&v| v - cfg.radius).collect(),
            c.iter().map(|&v| v + cfg.radius).collect(),
        )?;
        for i in 0..cfg.samples {
            let z = region.sample(&mut substream(cfg.seed, i as u64));
            min_det = min_det.min(det(&f.hessian_flat(&z)).abs());
        }
    }
    let a1 = min_det > T::lit(ASSUMPTION1_TOL);
    let s = eigenvalues(&h_gda(f, p)?)?.require_reliable()?;
    let a2 = s.eigenvalues.iter().all(|l| l.re.abs() > T::lit(SIGN_TOL));
    Ok((a1, a2))
}

/// Classification record for one critical point.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport<T> {
    pub point: PointXY<T>,
    pub value: T,
    pub grad_norm: T,
    pub multiplicity: usize,
    pub local_minmax: Verdict,
    pub strongly_local_minmax: bool,
    pub alpha: T,
    pub gda_at_alpha: Stability,
    pub ogda_at_alpha: Stability,
    pub gda_small_alpha: LimitStability,
    pub ogda_small_alpha: LimitStability,
    pub assumption1_holds: bool,
    pub assumption2_holds: bool,
    pub h_spectrum: SpectrumResult<T>,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn h_spectrum_report(&self) -> SpectrumReport {
        self.h_spectrum.report()
    }
}

/// All checks at one known critical point.
pub fn classify_point<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>, alpha: T) -> Result<StabilityReport<T>> {
    let grad_norm = require_critical(f, p)?;
    let hess = f.hessian(p)?.full();
    let h_spec = eigenvalues(&h_gda(f, p)?)?.require_reliable()?;
    let (a1, a2) = assumption_checks(f, p, &AssumptionConfig::default())?;
    Ok(StabilityReport {
        point: p.clone(),
        value: f.evaluate(p)?,
        grad_norm,
        multiplicity: 1,
        local_minmax: local_minmax_test(f, p)?,
        strongly_local_minmax: strongly_local_minmax_test(f, p)?,
        alpha,
        gda_at_alpha: gda_stability_at_alpha(f, p, alpha)?,
        ogda_at_alpha: ogda_stability_at_alpha(f, p, alpha)?,
        gda_small_alpha: gda_small_alpha_from_spectrum(&h_spec.eigenvalues),
        ogda_small_alpha: ogda_small_alpha_checked(&h_spec.eigenvalues, spectral_norm(&hess))?,
        assumption1_holds: a1,
        assumption2_holds: a2,
        h_spectrum: h_spec,
    })
}

/// Finds the critical points in `region` and classifies each; sorted
/// lexicographically by coordinates.
pub fn full_report<T: Scalar>(
    f: &MinMaxFunction<T>,
    region: &BoxRegion<T>,
    alpha: T,
    seeds: usize,
    seed: u64,
) -> Result<Vec<StabilityReport<T>>> {
    check_alpha(alpha)?;
    let set = find_critical_points(f, region, seeds, seed)?;
    reports_for(f, &set, alpha)
}

pub fn reports_for<T: Scalar>(
    f: &MinMaxFunction<T>,
    set: &CriticalPointSet<T>,
    alpha: T,
) -> Result<Vec<StabilityReport<T>>> {
    let mut out = Vec::with_capacity(set.len());
    for (p, &k) in set.points.iter().zip(&set.merged_multiplicity) {
        let mut r = classify_point(f, p, alpha)?;
        r.multiplicity = k;
        out.push(r);
    }
    out.sort_by(|a, b| report_order(&a.point, &b.point));
    Ok(out)
}

/// Lexicographic on coordinates rounded to the dedup radius, so that
/// `0.9999999999` and `1.0` compare equal in the leading coordinate.
fn report_order<T: Scalar>(a: &PointXY<T>, b: &PointXY<T>) -> Ordering {
    let key = |p: &PointXY<T>| -> Vec<i64> {
        p.as_slice()
            .iter()
            .map(|v| (v.to_f64_lossy() / DEDUP_RADIUS).round() as i64)
            .collect()
    };
    key(a).cmp(&key(b)).then_with(|| a.lex_cmp(b))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "YES"
    } else {
        "NO"
    }
}

fn fmt_point<T: Scalar>(p: &PointXY<T>) -> String {
    let coords: Vec<String> = p.as_slice().iter().map(|v| format!("{:.4}", tidy(v.to_f64_lossy()))).collect();
    format!("({})", coords.join(", "))
}

/// Drops signs on values that print as zero.
fn tidy(v: f64) -> f64 {
    if v.abs() < 5e-5 {
        0.0
    } else {
        v
    }
}

fn small(v: LimitStability) -> &'static str {
    match v {
        LimitStability::Stable => "YES",
        LimitStability::Unstable => "NO",
        LimitStability::Indeterminate => "?",
    }
}

/// Markdown table with the summary columns of the reference table plus the
/// step-size verdicts and assumption flags.
pub fn markdown_table<T: Scalar>(reports: &[StabilityReport<T>]) -> String {
    let mut s = String::new();
    s.push_str("| Critical point | GDA-stable | OGDA-stable | Local min-max | value of f | GDA at alpha | OGDA at alpha | strongly local min-max | Hessian invertible | no imaginary spec(H) |\n");
    s.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for r in reports {
        let lm = match r.local_minmax {
            Verdict::Yes => "YES",
            Verdict::No => "NO",
            Verdict::Indeterminate => "?",
        };
        s.push_str(&format!(
            "| {} | {} | {} | {} | {:.5} | {:?} | {:?} | {} | {} | {} |\n",
            fmt_point(&r.point),
            small(r.gda_small_alpha),
            small(r.ogda_small_alpha),
            lm,
            tidy(r.value.to_f64_lossy()),
            r.gda_at_alpha,
            r.ogda_at_alpha,
            yes_no(r.strongly_local_minmax),
            yes_no(r.assumption1_holds),
            yes_no(r.assumption2_holds),
        ));
    }
    s
}

/// JSON record of a report, with the `H` spectrum in the spectrum report format.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRecord {
    pub point: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub multiplicity: usize,
    pub local_minmax: Verdict,
    pub strongly_local_minmax: bool,
    pub alpha: f64,
    pub gda_at_alpha: Stability,
    pub ogda_at_alpha: Stability,
    pub gda_small_alpha: LimitStability,
    pub ogda_small_alpha: LimitStability,
    pub assumption1_holds: bool,
    pub assumption2_holds: bool,
    pub h_spectrum: SpectrumReport,
}

impl<T: Scalar> From<&StabilityReport<T>> for ReportRecord {
    fn from(r: &StabilityReport<T>) -> Self {
        ReportRecord {
            point: r.point.as_slice().iter().map(|v| v.to_f64_lossy()).collect(),
            value: r.value.to_f64_lossy(),
            grad_norm: r.grad_norm.to_f64_lossy(),
            multiplicity: r.multiplicity,
            local_minmax: r.local_minmax,
            strongly_local_minmax: r.strongly_local_minmax,
            alpha: r.alpha.to_f64_lossy(),
            gda_at_alpha: r.gda_at_alpha,
            ogda_at_alpha: r.ogda_at_alpha,
            gda_small_alpha: r.gda_small_alpha,
            ogda_small_alpha: r.ogda_small_alpha,
            assumption1_holds: r.assumption1_holds,
            assumption2_holds: r.assumption2_holds,
            h_spectrum: r.h_spectrum.report(),
        }
    }
}

pub fn reports_json<T: Scalar>(reports: &[StabilityReport<T>]) -> Result<String> {
    let recs: Vec<ReportRecord> = reports.iter().map(ReportRecord::from).collect();
    Ok(serde_json::to_string_pretty(&recs)?)
}

/// Compares computed small-step verdicts with the published table for the
/// two-dimensional composite example. One note per disagreement, plus a
/// note for reference rows that have no matching computed point.
pub fn reference_discrepancies<T: Scalar>(reports: &[StabilityReport<T>], rows: &[ReferenceRow]) -> Vec<String> {
    let mut notes = Vec::new();
    for row in rows {
        let target = PointXY::new(vec![T::lit(row.point[0])], vec![T::lit(row.point[1])]);
        let hit = reports
            .iter()
            .filter(|r| r.point.n() == 1 && r.point.m() == 1)
            .min_by(|a, b| {
                a.point
                    .distance(&target)
                    .partial_cmp(&b.point.distance(&target))
                    .unwrap_or(Ordering::Equal)
            });
        let Some(r) = hit.filter(|r| r.point.distance(&target) <= T::lit(1e-3)) else {
            notes.push(format!(
                "reference point ({}, {}) is not a computed critical point",
                row.point[0], row.point[1]
            ));
            continue;
        };
        let at = format!("({}, {})", row.point[0], row.point[1]);
        let cmp = |what: &str, computed: LimitStability, reference: bool, notes: &mut Vec<String>| {
            let agrees = match computed {
                LimitStability::Stable => reference,
                LimitStability::Unstable => !reference,
                LimitStability::Indeterminate => false,
            };
            if !agrees {
                notes.push(format!(
                    "{at}: computed {what} verdict {computed:?} (from spec(H) = {}) disagrees with reference {}",
                    fmt_spectrum(&r.h_spectrum.eigenvalues),
                    yes_no(reference)
                ));
            }
        };
        cmp("GDA small-step", r.gda_small_alpha, row.gda_stable, &mut notes);
        cmp("OGDA small-step", r.ogda_small_alpha, row.ogda_stable, &mut notes);
        let lm_agrees = matches!(
            (r.local_minmax, row.local_minmax),
            (Verdict::Yes, true) | (Verdict::No, false)
        );
        if !lm_agrees {
            notes.push(format!(
                "{at}: computed local min-max {:?} disagrees with reference {}",
                r.local_minmax,
                yes_no(row.local_minmax)
            ));
        }
    }
    notes
}

/// Notes for the composite example: the construction text says the origin
/// behaves like `f1` (GDA-stable) and `(1, 1)` like `f2` (GDA-unstable),
/// while the reference table lists the opposite. The verdicts below come
/// from the eigensolver only.
pub fn composite_notes<T: Scalar>(reports: &[StabilityReport<T>]) -> Vec<String> {
    let mut notes = vec![
        "the reference table lists (0,0) as GDA-unstable and (1,1) as GDA-stable, the opposite of the \
         construction text (origin like f1, (1,1) like f2); verdicts here are computed from spec(H)"
            .to_string(),
    ];
    for (x, y) in [(0.0, 0.0), (1.0, 1.0)] {
        let target = PointXY::new(vec![T::lit(x)], vec![T::lit(y)]);
        if let Some(r) = reports.iter().find(|r| r.point.distance(&target) <= T::lit(1e-6)) {
            notes.push(format!(
                "({x}, {y}): spec(H) = {} -> GDA {:?}, OGDA {:?}",
                fmt_spectrum(&r.h_spectrum.eigenvalues),
                r.gda_small_alpha,
                r.ogda_small_alpha
            ));
        }
    }
    notes.extend(reference_discrepancies(reports, &composite_reference_rows()));
    notes
}

fn fmt_spectrum<T: Scalar>(eigs: &[Complex<T>]) -> String {
    let parts: Vec<String> = eigs
        .iter()
        .map(|l| {
            let c = ComplexValue {
                re: l.re.to_f64_lossy() + 0.0,
                im: l.im.to_f64_lossy() + 0.0,
            };
            if c.im.abs() < 1e-12 {
                format!("{:.4}", c.re)
            } else {
                format!("{:.4}{:+.4}i", c.re, c.im)
            }
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}
