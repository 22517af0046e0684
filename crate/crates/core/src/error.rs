use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GscloError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("image dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("mask contains a value that is neither 0 nor 1")]
    NonBinaryMask,
    #[error("image {height}x{width} is smaller than the {window}x{window} window")]
    ImageTooSmall {
        height: usize,
        width: usize,
        window: usize,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("channel matrix at frame {frame} is rank deficient")]
    RankDeficient { frame: usize },
    #[error("problem with {frames} frames exceeds the enumeration limit of {limit}")]
    ProblemTooLarge { frames: usize, limit: usize },
    #[error("trace: {0}")]
    Trace(String),
}

pub type Result<T> = std::result::Result<T, GscloError>;
