use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum JcmError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("AN infeasible: transmit null space is empty")]
    AnInfeasible,

    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("empty observation batch")]
    EmptyBatch,

    #[error("insufficient dimension: {dim} antennas cannot hold a rank-{rank} signal subspace plus noise")]
    InsufficientDimension { dim: usize, rank: usize },

    #[error("jamming occupies full space: estimated covariance has no null space")]
    NoNullSpace,

    #[error("signal orthogonal to null space")]
    SignalOrthogonal,

    #[error("zero reference matrix in NMSE")]
    ZeroTruth,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("I/O error at {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, JcmError>;
