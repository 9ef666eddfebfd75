//! Monte Carlo basins of attraction, avoidance of unstable critical points,
//! the planted high-dimensional experiment and vector-field export.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{builtin, BuiltinId};
use crate::classify::{CriticalPointSet, LimitStability, Stability, StabilityReport};
use crate::dynamics::{gda_step, run, LiftedState, Method, Outcome, StepConfig};
use crate::error::{Error, Result};
use crate::function::{BoxRegion, MinMaxFunction, PointXY};
use crate::rng::substream;
use crate::scalar::Scalar;

pub const DEFAULT_ATTRIBUTION_RADIUS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig<T> {
    pub region: BoxRegion<T>,
    pub samples: usize,
    pub method: Method,
    pub step: StepConfig<T>,
    pub attribution_radius: T,
    pub seed: u64,
}

impl<T: Scalar> SweepConfig<T> {
    /// Sweep defaults: `alpha = 0.001`, `max_iters = 1e5`, radius `1e-3`.
    pub fn new(region: BoxRegion<T>, samples: usize, method: Method, seed: u64) -> Self {
        SweepConfig {
            region,
            samples,
            method,
            step: StepConfig::new(T::lit(0.001)).with_max_iters(100_000),
            attribution_radius: T::lit(DEFAULT_ATTRIBUTION_RADIUS),
            seed,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::input("sweep needs at least one sample"));
        }
        if !(self.attribution_radius > T::zero()) {
            return Err(Error::input("attribution radius must be > 0"));
        }
        self.region.check_dim(dim)?;
        self.region.check_volume()?;
        self.step.validate()
    }
}

/// Where one trajectory ended up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Attribution {
    Point(usize),
    Diverged,
    /// Budget exhausted.
    Exhausted,
    /// Converged, but not within the radius of any known critical point.
    Elsewhere,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult<T> {
    pub points: Vec<PointXY<T>>,
    pub counts: Vec<usize>,
    pub per_point_fraction: Vec<f64>,
    pub diverged: usize,
    pub exhausted: usize,
    pub elsewhere: usize,
    pub diverged_fraction: f64,
    /// Budget exhausted plus converged to no known critical point.
    pub unresolved_fraction: f64,
    pub samples: usize,
    pub config: SweepConfig<T>,
    pub seed: u64,
}

impl<T: Scalar> SweepResult<T> {
    fn from_attributions(points: Vec<PointXY<T>>, atts: &[Attribution], config: SweepConfig<T>) -> Self {
        let mut counts = vec![0usize; points.len()];
        let (mut diverged, mut exhausted, mut elsewhere) = (0, 0, 0);
        for a in atts {
            match *a {
                Attribution::Point(k) => counts[k] += 1,
                Attribution::Diverged => diverged += 1,
                Attribution::Exhausted => exhausted += 1,
                Attribution::Elsewhere => elsewhere += 1,
            }
        }
        let total = atts.len();
        let frac = |c: usize| c as f64 / total as f64;
        SweepResult {
            per_point_fraction: counts.iter().map(|&c| frac(c)).collect(),
            diverged_fraction: frac(diverged),
            unresolved_fraction: frac(exhausted + elsewhere),
            points,
            counts,
            diverged,
            exhausted,
            elsewhere,
            samples: total,
            seed: config.seed,
            config,
        }
    }

    /// Sum of all reported fractions; one up to rounding.
    pub fn total_fraction(&self) -> f64 {
        self.per_point_fraction.iter().sum::<f64>() + self.diverged_fraction + self.unresolved_fraction
    }

    /// Fraction attributed to the critical point nearest `p`, if it is within
    /// the attribution radius.
    pub fn fraction_at(&self, p: &PointXY<T>) -> Option<f64> {
        nearest(&self.points, p, self.config.attribution_radius).map(|k| self.per_point_fraction[k])
    }

    /// Indices of critical points with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.counts.len()).filter(|&k| self.counts[k] > 0).collect()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let c = &self.config;
        writeln!(out, "# method={} samples={} seed={}", c.method, self.samples, self.seed)?;
        writeln!(
            out,
            "# alpha={} max_iters={} conv_step_tol={} conv_grad_tol={} diverge_norm={} attribution_radius={}",
            c.step.alpha, c.step.max_iters, c.step.conv_step_tol, c.step.conv_grad_tol, c.step.diverge_norm, c.attribution_radius
        )?;
        writeln!(out, "# box_lo={} box_hi={}", join(&c.region.lo, " "), join(&c.region.hi, " "))?;
        writeln!(out, "# exhausted={} converged_elsewhere={}", self.exhausted, self.elsewhere)?;
        writeln!(out, "critical_point,fraction")?;
        for (p, f) in self.points.iter().zip(&self.per_point_fraction) {
            writeln!(out, "\"({})\",{}", join(p.as_slice(), " "), f)?;
        }
        writeln!(out, "diverged,{}", self.diverged_fraction)?;
        writeln!(out, "unresolved,{}", self.unresolved_fraction)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn join<T: Scalar>(v: &[T], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// Nearest point within `radius`; ties go to the first in `points` order.
fn nearest<T: Scalar>(points: &[PointXY<T>], p: &PointXY<T>, radius: T) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (k, q) in points.iter().enumerate() {
        let d = q.distance(p);
        if d <= radius && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    best.map(|(k, _)| k)
}

/// Runs `cfg.method` from one start and attributes the outcome.
pub fn attribute_one<T: Scalar>(
    f: &MinMaxFunction<T>,
    points: &[PointXY<T>],
    start: PointXY<T>,
    cfg: &SweepConfig<T>,
) -> Result<Attribution> {
    let r = run(f, &LiftedState::at_rest(start), &cfg.step, cfg.method, false)?;
    Ok(match r.outcome {
        Outcome::ConvergedTo(p) => match nearest(points, &p, cfg.attribution_radius) {
            Some(k) => Attribution::Point(k),
            None => Attribution::Elsewhere,
        },
        Outcome::Diverged { .. } => Attribution::Diverged,
        Outcome::BudgetExhausted => Attribution::Exhausted,
    })
}

/// Uniform starts in the box, sample `i` drawn from `substream(seed, i)`.
/// Points are ordered lexicographically before attribution so that the
/// tie-break is by coordinates.
pub fn basin_sweep<T: Scalar>(
    f: &MinMaxFunction<T>,
    critical_points: &CriticalPointSet<T>,
    cfg: &SweepConfig<T>,
) -> Result<SweepResult<T>> {
    if critical_points.is_empty() {
        return Err(Error::input("basin sweep needs at least one critical point"));
    }
    cfg.validate(f.dim())?;
    let mut points = critical_points.points.clone();
    points.sort_by(|a, b| a.lex_cmp(b));
    let n = f.n();
    let atts: Vec<Attribution> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let z = cfg.region.sample(&mut substream(cfg.seed, i as u64));
            attribute_one(f, &points, PointXY::from_flat(n, z), cfg)
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult::from_attributions(points, &atts, cfg.clone()))
}

/// True when the report marks its point unstable for `method`: unstable in
/// the small-step limit, or unstable at the sweep's own step size.
pub fn is_unstable_for<T: Scalar>(r: &StabilityReport<T>, method: Method, alpha: T) -> bool {
    let (small, at) = match method {
        Method::Gda => (r.gda_small_alpha, r.gda_at_alpha),
        Method::Ogda => (r.ogda_small_alpha, r.ogda_at_alpha),
    };
    small == LimitStability::Unstable || (r.alpha == alpha && at == Stability::Unstable)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AvoidanceResult<T> {
    /// Fraction of all samples attributed to unstable points.
    pub fraction: f64,
    pub unstable_points: Vec<PointXY<T>>,
    pub sweep: SweepResult<T>,
}

/// Mass a finished sweep puts on points the reports classify as unstable.
pub fn avoidance_from_sweep<T: Scalar>(sweep: SweepResult<T>, reports: &[StabilityReport<T>]) -> AvoidanceResult<T> {
    let method = sweep.config.method;
    let alpha = sweep.config.step.alpha;
    let radius = sweep.config.attribution_radius;
    let unstable: Vec<PointXY<T>> = reports
        .iter()
        .filter(|r| is_unstable_for(r, method, alpha))
        .map(|r| r.point.clone())
        .collect();
    let fraction = sweep
        .points
        .iter()
        .zip(&sweep.per_point_fraction)
        .filter(|(p, _)| unstable.iter().any(|u| u.distance(p) <= radius))
        .fold(0.0, |acc, (_, &f)| acc + f);
    AvoidanceResult {
        fraction,
        unstable_points: unstable,
        sweep,
    }
}

/// Sweeps over the reported critical points and measures the mass that lands
/// on unstable ones.
pub fn avoidance_check<T: Scalar>(
    f: &MinMaxFunction<T>,
    cfg: &SweepConfig<T>,
    reports: &[StabilityReport<T>],
) -> Result<AvoidanceResult<T>> {
    let set = CriticalPointSet::from_points(reports.iter().map(|r| r.point.clone()).collect(), |_| T::zero());
    let sweep = basin_sweep(f, &set, cfg)?;
    Ok(avoidance_from_sweep(sweep, reports))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HighDimResult {
    pub seed: u64,
    pub samples: usize,
    pub gda_fraction: f64,
    pub ogda_fraction: f64,
    pub gda_diverged: f64,
    pub ogda_diverged: f64,
}

/// Planted saddle in 5+5 dimensions: fraction of starts uniform in
/// `[-5, 5]^10` converging to the origin under each method.
pub fn highdim_experiment(seed: u64, samples: usize, step: &StepConfig<f64>) -> Result<HighDimResult> {
    highdim_experiment_in(seed, samples, step, 5.0)
}

/// As [`highdim_experiment`] with starts in `[-half_width, half_width]^10`.
pub fn highdim_experiment_in(seed: u64, samples: usize, step: &StepConfig<f64>, half_width: f64) -> Result<HighDimResult> {
    let f: MinMaxFunction<f64> = builtin(&BuiltinId::Planted10d { seed })?;
    let origin = CriticalPointSet::from_points(vec![PointXY::zeros(f.n(), f.m())], |_| 0.0);
    let mut out = HighDimResult {
        seed,
        samples,
        gda_fraction: 0.0,
        ogda_fraction: 0.0,
        gda_diverged: 0.0,
        ogda_diverged: 0.0,
    };
    for method in [Method::Gda, Method::Ogda] {
        let mut cfg = SweepConfig::new(BoxRegion::cube(f.dim(), -half_width, half_width), samples, method, seed);
        cfg.step = step.clone();
        let r = basin_sweep(&f, &origin, &cfg)?;
        match method {
            Method::Gda => {
                out.gda_fraction = r.per_point_fraction[0];
                out.gda_diverged = r.diverged_fraction;
            }
            Method::Ogda => {
                out.ogda_fraction = r.per_point_fraction[0];
                out.ogda_diverged = r.diverged_fraction;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldSample<T> {
    pub x: T,
    pub y: T,
    pub dx: T,
    pub dy: T,
}

/// `step(p) - p` on a `grid x grid` lattice over a 2D box. OGDA steps start
/// from the rest state `(p, p)`, where they coincide with GDA steps.
pub fn vector_field_export<T: Scalar>(
    f: &MinMaxFunction<T>,
    region: &BoxRegion<T>,
    grid: usize,
    alpha: T,
    method: Method,
) -> Result<Vec<FieldSample<T>>> {
    if f.dim() != 2 {
        return Err(Error::input(format!(
            "vector field export needs n = m = 1, got n = {}, m = {}",
            f.n(),
            f.m()
        )));
    }
    if grid < 2 {
        return Err(Error::input("grid must have at least 2 points per axis"));
    }
    region.check_dim(2)?;
    region.check_volume()?;
    let mut out = Vec::with_capacity(grid * grid);
    let last = T::from_usize_lossy(grid - 1);
    for i in 0..grid {
        let x = region.lo[0] + (region.hi[0] - region.lo[0]) * T::from_usize_lossy(i) / last;
        for j in 0..grid {
            let y = region.lo[1] + (region.hi[1] - region.lo[1]) * T::from_usize_lossy(j) / last;
            let p = PointXY::new(vec![x], vec![y]);
            let q = match method {
                Method::Gda => gda_step(f, &p, alpha)?,
                Method::Ogda => crate::dynamics::ogda_step(f, &LiftedState::at_rest(p.clone()), alpha)?.cur,
            };
            out.push(FieldSample {
                x,
                y,
                dx: q.x()[0] - x,
                dy: q.y()[0] - y,
            });
        }
    }
    Ok(out)
}

/// `x,y,dx,dy` rows after `#` comment lines carrying the settings.
pub fn write_field_csv<T: Scalar, W: Write>(out: &mut W, header: &[String], field: &[FieldSample<T>]) -> std::io::Result<()> {
    for h in header {
        writeln!(out, "# {h}")?;
    }
    writeln!(out, "x,y,dx,dy")?;
    for s in field {
        writeln!(out, "{},{},{},{}", s.x, s.y, s.dx, s.dy)?;
    }
    Ok(())
}
