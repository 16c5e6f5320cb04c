//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by evaluators, constructors and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A degree or matrix size exceeds the supported cap.
    #[error("{what} = {value} exceeds the supported maximum {max}")]
    SizeCap {
        what: &'static str,
        value: usize,
        max: usize,
    },

    /// An argument violates a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A function evaluated at a quadrature node returned a non-finite value.
    #[error("integrand is not finite at node {node}: {value}")]
    NonFiniteIntegrand { node: f64, value: f64 },

    /// Adaptive integration did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {value}, error estimate {error}")]
    QuadratureNonConvergence { value: f64, error: f64 },

    /// A covariance model failed validation.
    #[error("invalid covariance model: {0}")]
    InvalidModel(String),

    /// A theorem hypothesis needed by the requested computation does not hold.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    /// Geometry input is unbounded, empty or lower dimensional.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The covariance matrix could not be factored even with the largest jitter.
    #[error("covariance factorization failed with jitter up to {jitter:e}")]
    DegenerateCovariance { jitter: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
