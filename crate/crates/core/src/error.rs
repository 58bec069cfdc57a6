use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dyadic arithmetic overflow: numerator would exceed 2^63")]
    Overflow,

    #[error("invalid dyadic value: {0}")]
    InvalidDyadic(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("scheme does not converge: {0}")]
    NonConvergent(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mask violates the sum rule (even and odd coefficients must each sum to 1): {0}")]
    InvarianceViolation(String),

    #[error("eigenvalue 1 of T0 is not simple: {0}")]
    AmbiguousNormalization(String),

    #[error("continuity not certified: {0}")]
    ContinuityNotCertified(String),

    #[error("no contractive fixed point: {0}")]
    NoContractiveFixedPoint(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("not column-stochastic: {0}")]
    NotStochastic(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
