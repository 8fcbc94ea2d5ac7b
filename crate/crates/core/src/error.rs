use thiserror::Error;

/// Errors raised across the estimation pipeline.
#[derive(Debug, Error)]
pub enum FpcaError {
    /// Sizes of curves, kernels or grids do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A size, count or probability argument is out of its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unit index {index} out of range for population of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    /// Estimators that need at least one sampled unit.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Eigenvalue too close to a neighbour for the influence function to be defined.
    #[error("spectral gap {gap:e} for component {component} is below threshold {threshold:e}")]
    SpectralGap {
        component: usize,
        gap: f64,
        threshold: f64,
    },

    #[error("numerical integrity: {0}")]
    Numerical(String),

    #[error("enumeration refused: population size {0} exceeds the limit of 15")]
    EnumerationTooLarge(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FpcaError>;
