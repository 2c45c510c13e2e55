use std::io;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum DdaError {
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NonSymmetric { row: usize, col: usize, gap: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("class {class} has {count} samples, which is too few for the requested statistics")]
    DegenerateClass { class: usize, count: usize },

    #[error("within-class scatter {0:e} is not positive")]
    ZeroWithinScatter(f64),

    #[error("expected exactly two classes, found {0}")]
    NotTwoClass(usize),

    #[error("image shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("ground truth contains only one class")]
    OneClassOnly,

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("value {0} cannot be stored as an 8-bit intensity")]
    OutOfRange(f64),

    #[error("no mini-batch contained both classes; DDA training has nothing to optimize")]
    AllBatchesSkipped,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, DdaError>;
