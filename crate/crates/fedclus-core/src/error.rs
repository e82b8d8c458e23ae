//! Error type shared by the algorithmic core.

use alloc::string::String;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the clustering and protocol operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinates must be finite")]
    NonFiniteCoordinate,

    #[error("a data point needs at least one coordinate")]
    EmptyPoint,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("center set is empty")]
    EmptyCenterSet,

    #[error("norm order {0} is invalid: need a finite value >= 1")]
    InvalidNorm(f64),

    #[error("norm order {norm} is not supported by this operation (supported: {supported})")]
    UnsupportedNorm { norm: f64, supported: &'static str },

    #[error("insufficient points: need {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("insufficient distinct points: need {needed} distinct locations")]
    InsufficientDistinctPoints { needed: usize },

    #[error("assignment length {got} does not match dataset size {expected}")]
    AssignmentLength { expected: usize, got: usize },

    #[error("assignment refers to center {index} but only {centers} centers exist")]
    AssignmentOutOfRange { index: usize, centers: usize },

    #[error("label count {labels} does not match point count {points}")]
    LabelLength { labels: usize, points: usize },

    #[error("degenerate pool: fewer than {needed} distinct centers after aggregation")]
    DegeneratePool { needed: usize },

    #[error("operation requires a labeled dataset")]
    LabelsRequired,

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
