use thiserror::Error;

/// Errors produced by the reconstruction library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-integral dimensions: {0}")]
    NonIntegralDimensions(String),

    #[error("segment length S={segment} must satisfy 2 <= S < P={pulses}")]
    InvalidSegmentLength { segment: usize, pulses: usize },

    #[error("slide width W={slide} must satisfy 1 <= W < S={segment}")]
    InvalidSlide { slide: usize, segment: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    DimensionMismatch { what: &'static str, expected: usize, actual: usize },

    #[error("segment index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("segment {0} needs the previous segment's estimate")]
    MissingPreviousEstimate(usize),

    #[error("columns indexed by the support are linearly dependent")]
    RankDeficientSupport,

    #[error("restricted isometry constant of order {0} is not available")]
    MissingRipOrder(usize),

    #[error("exhaustive enumeration of {subsets} subsets exceeds the limit {limit}")]
    TooLarge { subsets: u128, limit: u128 },

    #[error("block matrix is rank deficient")]
    RankDeficient,

    #[error("blocks {0} and {1} are not orthogonal")]
    OrthogonalityViolated(usize, usize),

    #[error("reference vector is zero")]
    ZeroReference,

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
