use thiserror::Error;

/// Errors raised by the simulation, tracking, learning and optimisation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("target at radar origin has undefined azimuth")]
    DegeneratePosition,
    #[error("dwell time must be positive for a measurement update, got {0}")]
    NonPositiveDwell(f64),
    #[error("probability outside Albersheim validity region: pd={pd}, pf={pf}")]
    OutOfValidityRange { pd: f64, pf: f64 },
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("episode already finished at slot {0}")]
    EpisodeFinished(usize),
    #[error("empty episode history")]
    EmptyHistory,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("reference point {reference:?} is not dominated by front point {point:?}")]
    ReferenceNotDominated { point: [f64; 2], reference: [f64; 2] },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}
