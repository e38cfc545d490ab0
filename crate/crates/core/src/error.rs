use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("expected a square matrix with dim >= 1, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },

    #[error("eigensolver did not converge within {max_iterations} iterations (dim {dim})")]
    SolverFailure { dim: usize, max_iterations: usize },

    #[error("spectrum [{min}, {max}] lies outside the function domain [0, 1]")]
    Domain { min: f64, max: f64 },

    #[error("matrix is not positive semidefinite (lambda_min = {min})")]
    NotPsd { min: f64 },

    #[error("not an effect: eigenvalues span [{min}, {max}], expected within [0, 1]")]
    NotAnEffect { min: f64, max: f64 },

    #[error("not a projection: ||P^2 - P|| = {residual}")]
    NotAProjection { residual: f64 },

    #[error("expected a rank-1 projection, got rank {rank}")]
    NotRankOne { rank: usize },

    #[error("scalar {0} outside [0, 1]")]
    ScalarOutOfRange(f64),

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("vector norm {norm} differs from 1")]
    NotUnitVector { norm: f64 },

    #[error("operator is not unitary: ||U*U - I|| = {residual}")]
    NotUnitary { residual: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
