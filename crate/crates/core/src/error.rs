use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not monotone: symmetric part has eigenvalue {min_eigenvalue:e}")]
    NotMonotone { min_eigenvalue: f64 },

    /// An oracle was queried at a point outside its operator's domain.
    #[error("point outside operator domain (distance {distance:e})")]
    Domain { distance: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("linesearch failed for component {component} at iteration {iteration} after {tried} trials: {reason}")]
    LinesearchFailure {
        component: usize,
        iteration: usize,
        tried: usize,
        reason: String,
    },

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("oracle solver did not converge (residual {residual:e})")]
    OracleFailure { residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
