use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("corrupt field: non-finite sample at index {index}")]
    CorruptField { index: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("iterate left the admissible ball: |u|_H^2 = {h_norm2:.6e} > r = {radius:.6e}")]
    LeftBall { h_norm2: f64, radius: f64 },

    #[error("dilation aliasing: {fraction:.3e} of the mass falls outside the target box")]
    Aliasing { fraction: f64 },

    #[error("wrong verdict for this check: {0}")]
    WrongVerdict(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
