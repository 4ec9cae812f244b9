use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FtcError {
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("index {index} outside 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("sample {index} is not tuned but has target {value}")]
    NonzeroOffTarget { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no separating direction after {0} attempts")]
    DirectionExhausted(usize),
    #[error("duplicate abscissa {0}")]
    DuplicateAbscissa(f64),
    #[error("unbounded domain: {0}")]
    UnboundedDomain(String),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("clip system has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("null vector has mixed signs at coordinate {0}")]
    SignPattern(usize),
    #[error("no admissible scale up to 2^{0}")]
    ScaleExhausted(u32),
    #[error("sandwich violated for sample {0}")]
    SandwichViolation(usize),
    #[error("target {value} of sample {index} outside [-1, 1]")]
    TargetOutOfRange { index: usize, value: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("construction failed verification: {0}")]
    VerificationFailed(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
}

pub type Result<T> = std::result::Result<T, FtcError>;
