//! `minmax`: classify critical points, trace GDA/OGDA trajectories, run
//! basin sweeps, export vector fields and run the property suite.
//!
//! Exit codes: 0 success, 1 input error, 2 internal-consistency error,
//! 3 property failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use minmax::classify::{composite_notes, markdown_table, reports_json};
use minmax::dynamics::write_trace_csv;
use minmax::experiments::{avoidance_from_sweep, write_field_csv};
use minmax::properties::{run_suite, SuiteConfig};
use minmax::{
    basin_sweep, builtin_by_name, vector_field_export, BoxRegion, CriticalPointSet, Error,
    Function, FunctionFile, Lifted, Method, Outcome, Point, StepConfig, SweepConfig,
};

#[derive(Parser, Debug)]
#[command(name = "minmax", version, about = "GDA/OGDA stability analysis for min-max objectives")]
struct Cli {
    /// Worker threads for sweeps (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find and classify the critical points in a box.
    Classify(ClassifyArgs),
    /// Run one trajectory and write it as CSV.
    Trace(TraceArgs),
    /// Monte Carlo basin-of-attraction sweep.
    Sweep(SweepArgs),
    /// Export the one-step displacement field of a 2D objective.
    Field(FieldArgs),
    /// Run the numerical property suite.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Function file (JSON) or builtin name (xy, f1, f2, w, composite2d,
    /// composite2d-printed, planted10d[:seed], bilinear:a,b;c,d).
    #[arg(long = "fn", value_name = "SOURCE")]
    function: String,

    /// Sampling/search box. Once: the same bounds on every axis; repeated:
    /// one pair per axis.
    #[arg(long = "box", num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, action = clap::ArgAction::Append)]
    bounds: Vec<f64>,

    #[arg(long, env = "MINMAX_SEED", default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    format: Option<Format>,

    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Md,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Dyn {
    Gda,
    Ogda,
}

impl From<Dyn> for Method {
    fn from(d: Dyn) -> Method {
        match d {
            Dyn::Gda => Method::Gda,
            Dyn::Ogda => Method::Ogda,
        }
    }
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Random Newton starts.
    #[arg(long, default_value_t = 200)]
    seeds: usize,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "dyn", value_enum, default_value_t = Dyn::Gda)]
    dynamics: Dyn,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Start point, `x1..xn y1..ym`.
    #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
    start: Vec<f64>,
    /// OGDA memory slot; defaults to the start point.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    prev: Option<Vec<f64>>,
    /// Iteration budget; runs stop earlier on convergence or divergence.
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
    /// Write every k-th step (the last step is always written).
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "dyn", value_enum, default_value_t = Dyn::Gda)]
    dynamics: Dyn,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    radius: f64,
    /// Random Newton starts for the critical point search.
    #[arg(long, default_value_t = 200)]
    seeds: usize,
}

#[derive(Args, Debug)]
struct FieldArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "dyn", value_enum, default_value_t = Dyn::Gda)]
    dynamics: Dyn,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long, default_value_t = 50)]
    grid: usize,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Random points for the pointwise properties.
    #[arg(long, default_value_t = 1000)]
    points: usize,
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: e.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input() { 1 } else { 2 };
        Failure { code, error: e.into() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        input(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load_function(source: &str) -> CliResult<Function> {
    let path = Path::new(source);
    if path.exists() {
        return FunctionFile::load(path).map_err(|e| input(anyhow::Error::from(e).context(format!("loading {source}"))));
    }
    match builtin_by_name(source) {
        Ok(f) => Ok(f),
        Err(e) => {
            if source.ends_with(".json") || source.contains('/') {
                Err(input(anyhow::anyhow!("function file {source} does not exist")))
            } else {
                Err(e.into())
            }
        }
    }
}

fn region(bounds: &[f64], dim: usize) -> CliResult<BoxRegion<f64>> {
    let pairs: Vec<(f64, f64)> = bounds.chunks(2).map(|c| (c[0], c[1])).collect();
    let r = match pairs.len() {
        0 => BoxRegion::cube(dim, -5.0, 5.0),
        1 => BoxRegion::cube(dim, pairs[0].0, pairs[0].1),
        k if k == dim => BoxRegion::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())?,
        k => {
            return Err(input(anyhow::anyhow!(
                "--box given {k} times; use it once or once per axis ({dim})"
            )))
        }
    };
    r.check_volume()?;
    Ok(r)
}

fn open_out(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).map_err(input)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn point_from(f: &Function, coords: &[f64], what: &str) -> CliResult<Point> {
    if coords.len() != f.dim() {
        return Err(input(anyhow::anyhow!(
            "{what} needs {} values (n = {}, m = {}), got {}",
            f.dim(),
            f.n(),
            f.m(),
            coords.len()
        )));
    }
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(input(anyhow::anyhow!("{what} must be finite")));
    }
    Ok(Point::from_flat(f.n(), coords.to_vec()))
}

fn classify(a: &ClassifyArgs) -> CliResult<()> {
    let f = load_function(&a.common.function)?;
    let r = region(&a.common.bounds, f.dim())?;
    let reports = minmax::full_report(&f, &r, a.alpha, a.seeds, a.common.seed)?;
    let notes = if f.label().is_some_and(|l| l.starts_with("composite2d")) {
        composite_notes(&reports)
    } else {
        Vec::new()
    };
    let mut out = open_out(&a.common.out)?;
    match a.common.format.unwrap_or(Format::Md) {
        Format::Md => {
            write!(out, "{}", markdown_table(&reports))?;
            if !notes.is_empty() {
                writeln!(out)?;
                for n in &notes {
                    writeln!(out, "- note: {n}")?;
                }
            }
        }
        Format::Json => {
            writeln!(out, "{}", reports_json(&reports)?)?;
            for n in &notes {
                eprintln!("note: {n}");
            }
        }
        Format::Csv => {
            writeln!(out, "# alpha={} seed={} seeds={}", a.alpha, a.common.seed, a.seeds)?;
            writeln!(out, "point,value,local_minmax,gda_small_alpha,ogda_small_alpha,gda_at_alpha,ogda_at_alpha,assumption1,assumption2")?;
            for r in &reports {
                let coords: Vec<String> = r.point.as_slice().iter().map(|v| v.to_string()).collect();
                writeln!(
                    out,
                    "\"({})\",{},{},{},{},{},{},{},{}",
                    coords.join(" "),
                    r.value,
                    r.local_minmax,
                    r.gda_small_alpha,
                    r.ogda_small_alpha,
                    r.gda_at_alpha,
                    r.ogda_at_alpha,
                    r.assumption1_holds,
                    r.assumption2_holds
                )?;
            }
            for n in &notes {
                writeln!(out, "# note: {n}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn trace(a: &TraceArgs) -> CliResult<()> {
    let f = load_function(&a.common.function)?;
    let cur = point_from(&f, &a.start, "--start")?;
    let prev = match &a.prev {
        Some(p) => point_from(&f, p, "--prev")?,
        None => cur.clone(),
    };
    let method: Method = a.dynamics.into();
    let cfg = StepConfig::new(a.alpha).with_max_iters(a.max_iters);
    let start = Lifted::new(cur, prev)?;
    let r = minmax::run(&f, &start, &cfg, method, true)?;
    if a.stride == 0 {
        return Err(input(anyhow::anyhow!("--stride must be at least 1")));
    }
    let all = r.trace.as_deref().unwrap_or(&[]);
    let rows: Vec<(usize, Vec<f64>)> = all
        .iter()
        .enumerate()
        .filter(|(t, _)| t % a.stride == 0 || *t + 1 == all.len())
        .map(|(t, row)| (t, row.clone()))
        .collect();
    let mut out = open_out(&a.common.out)?;
    let outcome = match &r.outcome {
        Outcome::ConvergedTo(p) => format!("converged point={:?}", p.as_slice()),
        Outcome::Diverged { step, non_finite } => format!("diverged step={step} non_finite={non_finite}"),
        Outcome::BudgetExhausted => "budget_exhausted".to_string(),
    };
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            writeln!(
                out,
                "# fn={} dyn={method} alpha={} max_iters={} conv_step_tol={} conv_grad_tol={} diverge_norm={}",
                a.common.function, cfg.alpha, cfg.max_iters, cfg.conv_step_tol, cfg.conv_grad_tol, cfg.diverge_norm
            )?;
            write_trace_csv(&mut out, f.n(), f.m(), method, &rows)?;
            writeln!(out, "# outcome={outcome} steps={}", r.steps_taken)?;
        }
        Format::Json => {
            let v = serde_json::json!({
                "fn": a.common.function,
                "dyn": method,
                "config": cfg,
                "outcome": r.outcome.label(),
                "detail": outcome,
                "steps_taken": r.steps_taken,
                "trace": rows.iter().map(|(t, row)| serde_json::json!({"t": t, "state": row})).collect::<Vec<_>>(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(input)?)?;
        }
        Format::Md => return Err(input(anyhow::anyhow!("trace supports csv and json output"))),
    }
    out.flush()?;
    Ok(())
}

fn sweep(a: &SweepArgs) -> CliResult<()> {
    let f = load_function(&a.common.function)?;
    let r = region(&a.common.bounds, f.dim())?;
    let method: Method = a.dynamics.into();
    let reports = minmax::full_report(&f, &r, a.alpha, a.seeds, a.common.seed)?;
    if reports.is_empty() {
        return Err(input(anyhow::anyhow!("no critical points found in the box")));
    }
    let set = CriticalPointSet::from_points(reports.iter().map(|r| r.point.clone()).collect(), |_| 0.0);
    let mut cfg = SweepConfig::new(r, a.samples, method, a.common.seed);
    cfg.step = StepConfig::new(a.alpha).with_max_iters(a.max_iters);
    cfg.attribution_radius = a.radius;
    let result = basin_sweep(&f, &set, &cfg)?;
    let avoid = avoidance_from_sweep(result, &reports);
    let mut out = open_out(&a.common.out)?;
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            writeln!(out, "# fn={}", a.common.function)?;
            writeln!(out, "# unstable_fraction={}", avoid.fraction)?;
            avoid.sweep.write_csv(&mut out)?;
        }
        Format::Json => {
            let v = serde_json::json!({
                "fn": a.common.function,
                "unstable_fraction": avoid.fraction,
                "unstable_points": avoid.unstable_points,
                "sweep": avoid.sweep,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(input)?)?;
        }
        Format::Md => return Err(input(anyhow::anyhow!("sweep supports csv and json output"))),
    }
    out.flush()?;
    Ok(())
}

fn field(a: &FieldArgs) -> CliResult<()> {
    let f = load_function(&a.common.function)?;
    let r = region(&a.common.bounds, f.dim())?;
    let method: Method = a.dynamics.into();
    let field = vector_field_export(&f, &r, a.grid, a.alpha, method)?;
    let mut out = open_out(&a.common.out)?;
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let header = vec![
                format!("fn={} dyn={method} alpha={} grid={}", a.common.function, a.alpha, a.grid),
                format!("box_lo={} box_hi={} seed={}", spaced(&r.lo), spaced(&r.hi), a.common.seed),
            ];
            write_field_csv(&mut out, &header, &field)?;
        }
        Format::Json => {
            let v = serde_json::json!({
                "fn": a.common.function,
                "dyn": method,
                "alpha": a.alpha,
                "grid": a.grid,
                "seed": a.common.seed,
                "field": field,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(input)?)?;
        }
        Format::Md => return Err(input(anyhow::anyhow!("field supports csv and json output"))),
    }
    out.flush()?;
    Ok(())
}

fn check(a: &CheckArgs) -> CliResult<()> {
    let f = load_function(&a.common.function)?;
    let r = region(&a.common.bounds, f.dim())?;
    let mut cfg = SuiteConfig::new(a.alpha, r, a.common.seed);
    cfg.points = a.points;
    let outcomes = run_suite(&f, &cfg)?;
    let mut out = open_out(&a.common.out)?;
    match a.common.format.unwrap_or(Format::Md) {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&outcomes).map_err(input)?)?,
        Format::Md | Format::Csv => {
            for o in &outcomes {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{tag} {}: {}", o.name, o.detail)?;
            }
        }
    }
    out.flush()?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure {
            code: 3,
            error: anyhow::anyhow!("{failed} properties failed"),
        });
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(input)?;
    }
    match &cli.command {
        Command::Classify(a) => classify(a),
        Command::Trace(a) => trace(a),
        Command::Sweep(a) => sweep(a),
        Command::Field(a) => field(a),
        Command::Check(a) => check(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn spaced(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}
