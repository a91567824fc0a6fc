//! Shared error type for the whole crate.

use thiserror::Error;

/// Errors produced by channel solvers, linearization, environments, and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A noise covariance failed its symmetric positive-definite factorization.
    #[error("noise covariance is not positive definite")]
    NonPositiveDefiniteNoise,

    /// Matrix or vector shapes disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An input covariance has an eigenvalue below the near-PSD repair band.
    #[error("covariance is indefinite: eigenvalue {eigenvalue:.3e} is below the clamp tolerance {tolerance:.3e}")]
    IndefiniteCovariance { eigenvalue: f64, tolerance: f64 },

    /// Dynamics produced a NaN or infinite state component.
    #[error("non-finite state at rollout step {step}")]
    NonFiniteState { step: usize },

    /// A control exceeded the agent's actuation bound.
    #[error("action out of bounds for agent {agent}: |{value}| > {bound}")]
    ActionOutOfBounds {
        agent: usize,
        value: f64,
        bound: f64,
    },

    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A symmetric factorization failed on a matrix that should be PD.
    #[error("factorization failed: {0}")]
    FactorizationFailed(&'static str),

    /// The plain-text channel file could not be parsed.
    #[error("malformed channel file at line {line}: {message}")]
    ChannelFileFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(context: impl Into<String>) -> Self {
        Error::DimensionMismatch(context.into())
    }
}
