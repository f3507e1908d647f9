use thiserror::Error;

/// Errors produced by field arithmetic, code constructions, and the query
/// protocol.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} exceeds the 2^31 limit")]
    ModulusTooLarge(u64),
    #[error("zero has no multiplicative inverse")]
    InversionOfZero,
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("cauchy construction requires pairwise distinct points")]
    DegeneratePoints,
    #[error("field too small: {0}")]
    FieldTooSmall(String),
    #[error("sampling exhausted after {0} attempts")]
    SamplingExhausted(usize),
    #[error("matrix is not MDS")]
    NotMds,
    #[error("matrix is rank deficient")]
    RankError,
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("inconsistent client state: {0}")]
    StateError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
