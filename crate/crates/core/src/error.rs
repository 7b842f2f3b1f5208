use std::path::PathBuf;

use thiserror::Error;

use crate::wave::WaveVector;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("mode {k} lies outside the truncation band |k|_m <= {n}")]
    ModeOutOfBand { k: WaveVector, n: usize },

    #[error("negative semigroup time {0}")]
    NegativeTime(f64),

    #[error("time grid is empty")]
    EmptyGrid,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("input field is not solenoidal (divergence residual {0:e})")]
    InputNotSolenoidal(f64),

    #[error("input field is not real (conjugate-symmetry defect {0:e})")]
    InputNotReal(f64),

    #[error("majorant iteration is not contracting after {iterations} iterations (last increment {last_increment:e})")]
    NonContraction {
        iterations: usize,
        last_increment: f64,
        history: Vec<f64>,
    },

    #[error("Picard iteration did not converge after {iterations} iterations (last increment {last_increment:e})")]
    NoConvergence {
        iterations: usize,
        last_increment: f64,
        history: Vec<f64>,
    },

    #[error("step {step:e} exceeds the stability limit {limit:e}")]
    StepStability { step: f64, limit: f64 },

    #[error("need at least {needed} checkpoints below {below:e}, found {found}")]
    InsufficientCheckpoints {
        needed: usize,
        found: usize,
        below: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed spectral file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
