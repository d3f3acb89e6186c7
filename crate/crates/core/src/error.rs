use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("jitter scale must be positive, got {0}")]
    Scale(f64),
    #[error("delay ({d1},{d2}) exceeds the grid extent ({m},{n})")]
    Delay { d1: usize, d2: usize, m: usize, n: usize },
    #[error("degenerate frame: {0}")]
    Degenerate(String),
    #[error("lag ({h1},{h2}) has no overlap with a grid of extent ({m},{n})")]
    Overlap { h1: i64, h2: i64, m: usize, n: usize },
    #[error("invalid chart configuration: {0}")]
    Config(String),
    #[error("coefficients violate the stationarity condition: {0}")]
    Stationarity(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("solver did not converge: {0}")]
    Convergence(String),
    #[error("contamination not applicable: {0}")]
    Model(String),
    #[error("could not bracket the target ARL: {0}")]
    Bracket(String),
    #[error("limit search did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
