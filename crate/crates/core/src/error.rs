use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("not primitive: {0}")]
    NotPrimitive(String),
    #[error("invalid splitting: {0}")]
    InvalidSplitting(String),
    #[error("vector is parallel to the slit")]
    ParallelToW,
    #[error("cross product with the slit exceeds the torus area on side {0}")]
    CrossTooLarge(u8),
    #[error("H(2) partner must satisfy |v2 x w| = A2")]
    H2Mismatch,
    #[error("twist parameter k must be nonzero")]
    ZeroTwist,
    #[error("twist k = {0} is not allowed for this pair")]
    NotAllowed(String),
    #[error("twisted splitting failed validation: {0}")]
    InvalidResult(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no irrational twist among three same-sign twists (implementation bug)")]
    LemmaViolation,
    #[error("slope sigma_k vanishes")]
    SigmaZero,
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("unknown example {0:?}")]
    UnknownExample(String),
}

pub type Result<T> = std::result::Result<T, Error>;
