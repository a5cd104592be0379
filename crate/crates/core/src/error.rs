//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numerical kernels and the CLI harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the closed unit cube (or the requested box).
    #[error("point {point:?} is outside the domain")]
    OutOfDomain { point: Vec<f64> },

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A piecewise polynomial was supplied at the wrong dyadic level.
    #[error("grid level mismatch: expected {expected:?}, got {got:?}")]
    LevelMismatch { expected: Vec<u64>, got: Vec<u64> },

    /// A coefficient or node vector has the wrong length.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// An integer count exceeded the platform range.
    #[error("integer overflow while computing {what}")]
    Overflow { what: &'static str },

    /// Adaptive quadrature failed to meet its tolerance at the refinement cap.
    #[error("quadrature did not converge: estimated error {err:.3e} exceeds tolerance {tol:.3e}")]
    QuadratureNoConvergence { err: f64, tol: f64 },

    /// A parameter combination violates a precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// No asymptotic regime covers the requested parameters.
    #[error("parameters are inapplicable: {violated}")]
    Inapplicable { violated: String },

    /// A subspace basis is rank deficient.
    #[error("basis is rank deficient")]
    RankDeficient,

    /// A named catalog function does not exist.
    #[error("unknown function name: {0}")]
    UnknownFunction(String),

    /// A named verification suite does not exist.
    #[error("unknown suite name: {0}")]
    UnknownSuite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
