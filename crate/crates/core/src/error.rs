use thiserror::Error;

/// Errors raised by the moment engines, transforms and checks.
#[derive(Debug, Error)]
pub enum NcError {
    #[error("word degree {degree} exceeds the configured cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("algebra mismatch: expected {expected}, found {found}")]
    AlgebraMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resolvent is singular at continued-fraction level {level}")]
    SingularResolvent { level: usize },

    #[error("not a matching free Meixner pair: {0}")]
    NotMeixnerPair(String),

    #[error("square-root branch or series convergence violated: {0}")]
    Branch(String),

    #[error("sample point {z} lies within {distance:e} of the spectrum")]
    NearSpectrum { z: String, distance: f64 },

    #[error("partition coloring does not match the word colors at position {position}")]
    ColorMismatch { position: usize },

    #[error("moment table is not symmetric: {0}")]
    NonSymmetric(String),

    #[error("malformed input: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NcError>;
