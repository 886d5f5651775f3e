//! Error type shared across the library.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("time {0} outside [0, 1]")]
    TimeOutOfRange(f64),

    #[error("transition kernel is singular at t = {0}")]
    SingularKernel(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ensemble needs at least {min} members, got {got}")]
    EnsembleTooSmall { min: usize, got: usize },

    #[error("score estimator degenerate: all importance ratios are -inf")]
    DegenerateEstimator,

    #[error("target log-density returned a NaN at an importance node")]
    InvalidLogDensity,

    #[error("non-finite state in member {member} at t = {time}")]
    NonFiniteState { member: usize, time: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("target does not provide a gradient (required by this sampler)")]
    MissingGradient,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
