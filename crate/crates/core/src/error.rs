use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("solvability condition violated: |∫A θ0'| = {integral:e} >= {tolerance:e}")]
    SolvabilityViolation { integral: f64, tolerance: f64 },

    #[error("implicit solve residual {residual:e} exceeds target {target:e}")]
    SolverDivergence { residual: f64, target: f64 },

    #[error("degenerate phase: ∫√(4W(u)) = {denominator:e} is below the floor {floor:e} (u ≈ ±1 everywhere)")]
    DegeneratePhase { denominator: f64, floor: f64 },

    #[error(
        "overshoot at step {step} (t = {time}): max|u| = {max_abs} exceeds {bound}; \
         retry with a smaller dt"
    )]
    OvershootAbort { step: u64, time: f64, max_abs: f64, bound: f64 },

    #[error("time step {dt:e} exceeds the stability budget {dt_max:e} (0.2·eps²)")]
    TimeStepTooLarge { dt: f64, dt_max: f64 },

    #[error("curve clearance to the domain boundary is {clearance}, need at least {required}")]
    CurveTouchesBoundary { clearance: f64, required: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curve self-intersects at t = {time}")]
    SelfIntersection { time: f64 },

    #[error("eigensolver stalled after {iterations} iterations (last estimate {estimate:e})")]
    EigSolverStall { iterations: usize, estimate: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }
}
