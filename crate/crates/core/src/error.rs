use thiserror::Error;

use crate::evolve::TrajectoryDiagnostics;
use crate::stability::StabilityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count mismatch: grid has {expected} sites, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("{0} requires a nonzero field")]
    ZeroField(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested perturbation size cannot be produced by the chosen shape.
    #[error("unreachable perturbation size: {0}")]
    UnreachableDelta(String),

    /// Time integration produced a non-finite value. Carries everything recorded so far.
    #[error("evolution aborted at t = {time}: {reason}")]
    EvolutionAborted {
        time: f64,
        reason: String,
        partial: Box<TrajectoryDiagnostics>,
    },

    #[error("stability run aborted at t = {time}: {reason}")]
    StabilityAborted {
        time: f64,
        reason: String,
        partial: Box<StabilityReport>,
    },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
