//! GDA and OGDA iterations.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{MinMaxFunction, PointXY};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gda,
    Ogda,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gda => "gda",
            Method::Ogda => "ogda",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gda" => Ok(Method::Gda),
            "ogda" => Ok(Method::Ogda),
            _ => Err(Error::input(format!("unknown dynamics '{s}' (expected gda or ogda)"))),
        }
    }
}

/// Step size, budget and stopping thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig<T> {
    pub alpha: T,
    pub max_iters: usize,
    pub conv_step_tol: T,
    pub conv_grad_tol: T,
    pub diverge_norm: T,
}

impl<T: Scalar> StepConfig<T> {
    pub fn new(alpha: T) -> Self {
        StepConfig {
            alpha,
            max_iters: 10_000,
            conv_step_tol: T::lit(1e-9),
            conv_grad_tol: T::lit(1e-7),
            diverge_norm: T::lit(1e6),
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.alpha) {
            return Err(Error::input(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(pos(self.conv_step_tol) && pos(self.conv_grad_tol) && pos(self.diverge_norm)) {
            return Err(Error::input("tolerances and divergence threshold must be > 0"));
        }
        Ok(())
    }
}

/// OGDA state: current point and the previous one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedState<T> {
    pub cur: PointXY<T>,
    pub prev: PointXY<T>,
}

impl<T: Scalar> LiftedState<T> {
    pub fn new(cur: PointXY<T>, prev: PointXY<T>) -> Result<Self> {
        if cur.n() != prev.n() || cur.m() != prev.m() {
            return Err(Error::input("current and previous points differ in dimension"));
        }
        Ok(LiftedState { cur, prev })
    }

    /// Warm start: `prev = cur`, so the first OGDA step equals a GDA step.
    pub fn at_rest(p: PointXY<T>) -> Self {
        LiftedState { prev: p.clone(), cur: p }
    }

    pub fn norm(&self) -> T {
        let a = self.cur.norm();
        let b = self.prev.norm();
        (a * a + b * b).sqrt()
    }
}

fn check<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>, alpha: T) -> Result<()> {
    if !(alpha > T::zero()) {
        return Err(Error::input(format!("alpha must be > 0, got {alpha}")));
    }
    if p.n() != f.n() {
        return Err(Error::dim("x block", f.n(), p.n()));
    }
    if p.m() != f.m() {
        return Err(Error::dim("y block", f.m(), p.m()));
    }
    Ok(())
}

/// `(x - a grad_x f, y + a grad_y f)`.
pub fn gda_step<T: Scalar>(f: &MinMaxFunction<T>, p: &PointXY<T>, alpha: T) -> Result<PointXY<T>> {
    check(f, p, alpha)?;
    let mut g = vec![T::zero(); f.dim()];
    f.gradient_flat(p.as_slice(), &mut g);
    let mut out = p.clone();
    apply_gda(f.n(), alpha, &g, out.as_mut_slice());
    Ok(out)
}

fn apply_gda<T: Scalar>(n: usize, alpha: T, g: &[T], z: &mut [T]) {
    for (i, (zi, &gi)) in z.iter_mut().zip(g).enumerate() {
        if i < n {
            *zi -= alpha * gi;
        } else {
            *zi += alpha * gi;
        }
    }
}

fn apply_ogda<T: Scalar>(n: usize, alpha: T, g_cur: &[T], g_prev: &[T], z: &mut [T]) {
    let two_a = alpha + alpha;
    for i in 0..z.len() {
        let d = two_a * g_cur[i] - alpha * g_prev[i];
        if i < n {
            z[i] -= d;
        } else {
            z[i] += d;
        }
    }
}

/// One optimistic step: the new current point uses both gradients, the
/// memory slot receives the old current point.
pub fn ogda_step<T: Scalar>(f: &MinMaxFunction<T>, s: &LiftedState<T>, alpha: T) -> Result<LiftedState<T>> {
    check(f, &s.cur, alpha)?;
    check(f, &s.prev, alpha)?;
    let d = f.dim();
    let mut gc = vec![T::zero(); d];
    let mut gp = vec![T::zero(); d];
    f.gradient_flat(s.cur.as_slice(), &mut gc);
    f.gradient_flat(s.prev.as_slice(), &mut gp);
    let mut next = s.cur.clone();
    apply_ogda(f.n(), alpha, &gc, &gp, next.as_mut_slice());
    Ok(LiftedState {
        cur: next,
        prev: s.cur.clone(),
    })
}

/// The memoryless map on `(x, y, z, w)` in `R^(2(n+m))` that reproduces OGDA,
/// written through `F(x, y, z, w) = f(x, y)`: the first two output blocks
/// take `grad_{x,y} F` at the state and `grad_{z,w} F` at the swapped state
/// `(z, w, x, y)`; the last two copy `(x, y)`.
pub fn lifted_map<T: Scalar>(f: &MinMaxFunction<T>, state: &[T], alpha: T) -> Result<Vec<T>> {
    let d = f.dim();
    if state.len() != 2 * d {
        return Err(Error::dim("lifted state", 2 * d, state.len()));
    }
    if !(alpha > T::zero()) {
        return Err(Error::input("alpha must be > 0"));
    }
    let n = f.n();
    let lifted_grad = |s: &[T]| -> Vec<T> {
        // grad of F(a, b, c, e) = f(a, b); the trailing blocks are zero
        let mut g = vec![T::zero(); 2 * d];
        f.gradient_flat(&s[..d], &mut g[..d]);
        g
    };
    let at_state = lifted_grad(state);
    let mut swapped = state[d..].to_vec();
    swapped.extend_from_slice(&state[..d]);
    let at_swapped = lifted_grad(&swapped);
    let two_a = alpha + alpha;
    let mut out = vec![T::zero(); 2 * d];
    for i in 0..d {
        // grad_{z,w} F(z, w, x, y) lives in the first block of at_swapped
        let d_i = two_a * at_state[i] - alpha * at_swapped[i];
        out[i] = if i < n { state[i] - d_i } else { state[i] + d_i };
        out[d + i] = state[i];
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Outcome<T> {
    ConvergedTo(PointXY<T>),
    /// Step at which the state left the divergence ball or became non-finite.
    Diverged { step: usize, non_finite: bool },
    BudgetExhausted,
}

impl<T> Outcome<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::ConvergedTo(_) => "converged",
            Outcome::Diverged { .. } => "diverged",
            Outcome::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FinalState<T> {
    Point(PointXY<T>),
    Lifted(LiftedState<T>),
}

impl<T: Scalar> FinalState<T> {
    pub fn current(&self) -> &PointXY<T> {
        match self {
            FinalState::Point(p) => p,
            FinalState::Lifted(s) => &s.cur,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult<T> {
    pub outcome: Outcome<T>,
    pub steps_taken: usize,
    pub final_state: FinalState<T>,
    /// Flat states (`x, y` and for OGDA also the memory slot), one per step
    /// starting with the initial state, when tracing was requested.
    pub trace: Option<Vec<Vec<T>>>,
}

/// Runs `method` from `start` until convergence, divergence or budget.
///
/// Convergence needs both `||s_{t+1} - s_t|| <= conv_step_tol` (lifted state
/// for OGDA) and `||grad f|| <= conv_grad_tol` at the current point.
pub fn run<T: Scalar>(
    f: &MinMaxFunction<T>,
    start: &LiftedState<T>,
    cfg: &StepConfig<T>,
    method: Method,
    trace: bool,
) -> Result<TrajectoryResult<T>> {
    cfg.validate()?;
    check(f, &start.cur, cfg.alpha)?;
    check(f, &start.prev, cfg.alpha)?;
    let d = f.dim();
    let n = f.n();
    let alpha = cfg.alpha;
    let step_tol2 = cfg.conv_step_tol * cfg.conv_step_tol;
    let grad_tol2 = cfg.conv_grad_tol * cfg.conv_grad_tol;
    let div2 = cfg.diverge_norm * cfg.diverge_norm;

    let mut cur = start.cur.as_slice().to_vec();
    let mut prev = match method {
        Method::Gda => cur.clone(),
        Method::Ogda => start.prev.as_slice().to_vec(),
    };
    let mut g_cur = vec![T::zero(); d];
    let mut g_prev = vec![T::zero(); d];
    let mut next = vec![T::zero(); d];
    f.gradient_flat(&prev, &mut g_prev);

    let mut rows: Option<Vec<Vec<T>>> = trace.then(Vec::new);
    let record = |rows: &mut Option<Vec<Vec<T>>>, cur: &[T], prev: &[T]| {
        if let Some(r) = rows.as_mut() {
            let mut row = cur.to_vec();
            if method == Method::Ogda {
                row.extend_from_slice(prev);
            }
            r.push(row);
        }
    };
    record(&mut rows, &cur, &prev);

    let finish = |cur: Vec<T>, prev: Vec<T>| match method {
        Method::Gda => FinalState::Point(PointXY::from_flat(n, cur)),
        Method::Ogda => FinalState::Lifted(LiftedState {
            cur: PointXY::from_flat(n, cur),
            prev: PointXY::from_flat(n, prev),
        }),
    };

    for t in 0..cfg.max_iters {
        f.gradient_flat(&cur, &mut g_cur);
        next.copy_from_slice(&cur);
        match method {
            Method::Gda => apply_gda(n, alpha, &g_cur, &mut next),
            Method::Ogda => apply_ogda(n, alpha, &g_cur, &g_prev, &mut next),
        }
        // lifted step difference: (next - cur, cur - prev)
        let mut step2 = T::zero();
        let mut norm2 = T::zero();
        let mut finite = true;
        for i in 0..d {
            let a = next[i] - cur[i];
            step2 += a * a;
            norm2 += next[i] * next[i];
            finite &= next[i].is_finite();
        }
        if method == Method::Ogda {
            for i in 0..d {
                let b = cur[i] - prev[i];
                step2 += b * b;
                norm2 += cur[i] * cur[i];
            }
        }
        let grad2: T = g_cur.iter().map(|&v| v * v).sum();

        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        std::mem::swap(&mut g_prev, &mut g_cur);
        record(&mut rows, &cur, &prev);
        let steps = t + 1;

        if !finite || !norm2.is_finite() || !grad2.is_finite() {
            return Ok(TrajectoryResult {
                outcome: Outcome::Diverged {
                    step: steps,
                    non_finite: true,
                },
                steps_taken: steps,
                final_state: finish(cur, prev),
                trace: rows,
            });
        }
        if norm2 > div2 {
            return Ok(TrajectoryResult {
                outcome: Outcome::Diverged {
                    step: steps,
                    non_finite: false,
                },
                steps_taken: steps,
                final_state: finish(cur, prev),
                trace: rows,
            });
        }
        // g_prev now holds grad f at the point the step was taken from; the
        // convergence test also wants the gradient at the new point small.
        if step2 <= step_tol2 && grad2 <= grad_tol2 {
            let mut g_new = vec![T::zero(); d];
            f.gradient_flat(&cur, &mut g_new);
            let g_new2: T = g_new.iter().map(|&v| v * v).sum();
            if g_new2 <= grad_tol2 {
                let point = PointXY::from_flat(n, cur.clone());
                return Ok(TrajectoryResult {
                    outcome: Outcome::ConvergedTo(point),
                    steps_taken: steps,
                    final_state: finish(cur, prev),
                    trace: rows,
                });
            }
        }
    }
    Ok(TrajectoryResult {
        outcome: Outcome::BudgetExhausted,
        steps_taken: cfg.max_iters,
        final_state: finish(cur, prev),
        trace: rows,
    })
}

/// Writes `(step, state)` rows as CSV: `t,x1..xn,y1..ym` and, for OGDA,
/// `px1..,py1..`.
pub fn write_trace_csv<T: Scalar, W: Write>(
    out: &mut W,
    n: usize,
    m: usize,
    method: Method,
    rows: &[(usize, Vec<T>)],
) -> std::io::Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("y{i}")));
    if method == Method::Ogda {
        header.extend((1..=n).map(|i| format!("px{i}")));
        header.extend((1..=m).map(|i| format!("py{i}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for (t, row) in rows {
        write!(out, "{t}")?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_by_name;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> PointXY<f64> {
        PointXY::new(vec![x], vec![y])
    }

    #[test]
    fn gda_step_on_xy() {
        let f = builtin_by_name("xy").unwrap();
        let p = gda_step(&f, &pt(1.0, 1.0), 0.1).unwrap();
        assert_relative_eq!(p.x()[0], 0.9);
        assert_relative_eq!(p.y()[0], 1.1);
    }

    #[test]
    fn ogda_step_at_rest_equals_gda_step() {
        let f = builtin_by_name("xy").unwrap();
        let s = ogda_step(&f, &LiftedState::at_rest(pt(1.0, 1.0)), 0.1).unwrap();
        assert_relative_eq!(s.cur.x()[0], 0.9);
        assert_relative_eq!(s.cur.y()[0], 1.1);
        assert_eq!(s.prev, pt(1.0, 1.0));
    }

    #[test]
    fn ogda_step_hand_value() {
        // cur = (1, 0), prev = (0, 1); grad xy = (y, x)
        // x' = 1 - 0.2*0 + 0.1*1 = 1.1 ; y' = 0 + 0.2*1 - 0.1*0 = 0.2
        let f = builtin_by_name("xy").unwrap();
        let s = LiftedState::new(pt(1.0, 0.0), pt(0.0, 1.0)).unwrap();
        let next = ogda_step(&f, &s, 0.1).unwrap();
        assert_relative_eq!(next.cur.x()[0], 1.1);
        assert_relative_eq!(next.cur.y()[0], 0.2);
        assert_eq!(next.prev, pt(1.0, 0.0));
    }

    #[test]
    fn method_parse() {
        assert_eq!("OGDA".parse::<Method>().unwrap(), Method::Ogda);
        assert!("sgd".parse::<Method>().is_err());
    }

    #[test]
    fn non_finite_start_diverges_immediately() {
        let f = builtin_by_name("xy").unwrap();
        let r = run(&f, &LiftedState::at_rest(pt(f64::NAN, 1.0)), &StepConfig::new(0.1), Method::Gda, false).unwrap();
        assert!(matches!(r.outcome, Outcome::Diverged { non_finite: true, .. }));
    }

    #[test]
    fn bad_config_is_rejected() {
        let f = builtin_by_name("xy").unwrap();
        let mut cfg = StepConfig::new(0.1);
        cfg.conv_grad_tol = 0.0;
        assert!(run(&f, &LiftedState::at_rest(pt(1.0, 1.0)), &cfg, Method::Gda, false).is_err());
        assert!(gda_step(&f, &pt(1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let mut buf = Vec::new();
        write_trace_csv::<f64, _>(&mut buf, 1, 1, Method::Ogda, &[(0, vec![1.0, 2.0, 3.0, 4.0])]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "t,x1,y1,px1,py1\n0,1,2,3,4\n");
    }
}
