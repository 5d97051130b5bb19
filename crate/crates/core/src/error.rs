use thiserror::Error;

/// Errors raised by the chaos algebra.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChaosError {
    #[error("invalid grid: horizon {horizon} and cells {cells} (need horizon > 0, cells >= 1)")]
    InvalidGrid { horizon: f64, cells: usize },
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("coefficient count {found} does not match shape (expected {expected})")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("contraction order {p} exceeds min degree {max}")]
    ContractionOrder { p: usize, max: usize },
    #[error("index {index} out of range for {cells} cells")]
    IndexOutOfRange { index: usize, cells: usize },
    #[error("interval [{a}, {b}] is not ordered or starts below 0")]
    InvalidInterval { a: f64, b: f64 },
    #[error("time {t} lies outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("field operators need a real direction vector")]
    NonRealDirection,
    #[error("adjacent Wick blocks share the index {index}")]
    AdjacentBlocks { index: usize },
    #[error("biprocess is not adapted")]
    NotAdapted,
    #[error("element is not self-adjoint (mirror defect {defect:e})")]
    NotSelfAdjoint { defect: f64 },
    #[error("operation needs a nonzero chaos element")]
    ZeroElement,
    #[error("reduction needs {expected} steps (top degree), got {found}")]
    StepCount { expected: usize, found: usize },
    #[error("truncation {truncation} below required degree {required}")]
    TruncationTooSmall { truncation: usize, required: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
