use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("truncation mismatch: ({d1},{n1}) vs ({d2},{n2})")]
    TruncationMismatch {
        d1: usize,
        n1: usize,
        d2: usize,
        n2: usize,
    },
    #[error("basis mismatch: expected {expected}, found {found}")]
    BasisMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("degree {0} above the recurrence stability bound 60")]
    DegreeTooHigh(u32),
    #[error("quadrature rule too coarse: Q={q} but N={n} needs Q >= N+1")]
    RuleTooCoarse { q: usize, n: usize },
    #[error("point outside the accuracy region: {0}")]
    OutsideAccuracy(String),
    #[error("point outside grid hull: {0}")]
    OutsideHull(String),
    #[error("matrix not invertible (conditioned determinant {0:e})")]
    NonInvertible(f64),
    #[error("matrix condition violated: {0}")]
    MatrixCondition(String),
    #[error("exponent relation violated: {0}")]
    ExponentRelation(String),
    #[error("weight condition violated: {0}")]
    WeightCondition(String),
    #[error("insufficient dynamic range: {0}")]
    InsufficientRange(String),
    #[error("quadrature not certified: {0}")]
    NotCertified(String),
    #[error("aliasing detected: {0}")]
    Aliasing(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
