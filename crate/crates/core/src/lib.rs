//! Stability analysis of gradient descent/ascent (GDA) and optimistic GDA
//! (OGDA) on unconstrained min-max problems `min_x max_y f(x, y)`.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`.

pub mod catalog;
pub mod classify;
pub mod dynamics;
pub mod eigen;
pub mod experiments;
pub mod error;
pub mod function;
pub mod linalg;
pub mod polynomial;
pub mod properties;
pub mod rng;
pub mod scalar;
pub mod spectral;

pub use catalog::{builtin, builtin_by_name, BuiltinId};
pub use classify::{
    find_critical_points, full_report, CriticalPointSet, LimitStability, Stability, StabilityReport, Verdict,
};
pub use dynamics::{gda_step, ogda_step, run, LiftedState, Method, Outcome, StepConfig, TrajectoryResult};
pub use eigen::{eigenvalues, spectral_radius, SpectrumResult};
pub use error::{Error, Result};
pub use experiments::{avoidance_check, basin_sweep, highdim_experiment, vector_field_export, SweepConfig, SweepResult};
pub use function::{BoxRegion, FunctionFile, HessianBlocks, MinMaxFunction, PointXY};
pub use linalg::Matrix;
pub use polynomial::{SparsePolynomial, Term};
pub use scalar::Scalar;

pub use num_complex::Complex;

pub type Function = MinMaxFunction<f64>;
pub type Point = PointXY<f64>;
pub type Lifted = LiftedState<f64>;
pub type Region = BoxRegion<f64>;
pub type Config = StepConfig<f64>;
pub type Spectrum = SpectrumResult<f64>;
pub type Report = StabilityReport<f64>;
pub type CriticalPoints = CriticalPointSet<f64>;
pub type Sweep = SweepConfig<f64>;
pub type SweepOutcome = SweepResult<f64>;
pub type Mat = Matrix<f64>;
pub type C64 = Complex<f64>;
