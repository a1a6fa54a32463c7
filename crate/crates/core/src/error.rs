use thiserror::Error;

use crate::c64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point} lies outside the disc D({center}, {radius})")]
    PointOutsideDisc { point: c64, center: c64, radius: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("system validation failed: {0}")]
    ValidationFailed(String),

    #[error("system has not been validated")]
    Unvalidated,

    #[error("branch index {index} out of range for a system with {count} branches")]
    BranchIndex { index: usize, count: usize },

    #[error("generator a{generator} exceeds the rank {rank} of the free group")]
    GeneratorIndex { generator: usize, rank: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PointOutsideDisc { .. } => "point_outside_disc",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::ValidationFailed(_) => "validation_failed",
            Error::Unvalidated => "unvalidated_system",
            Error::BranchIndex { .. } => "branch_index",
            Error::GeneratorIndex { .. } => "generator_index",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::CapExceeded(_) => "cap_exceeded",
            Error::TooFewSamples(_) => "too_few_samples",
            Error::LinearAlgebra(_) => "linear_algebra",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
