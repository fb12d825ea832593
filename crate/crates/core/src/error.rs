use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate element {element}: signed area {area:e}")]
    DegenerateElement { element: usize, area: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerically singular operator at row {row}: pivot {pivot:e}, pivot ratio estimate {condition:e}")]
    SingularOperator { row: usize, pivot: f64, condition: f64 },

    #[error("linear solver broke down after {iterations} iterations (relative residual {residual:e})")]
    SolverBreakdown { iterations: usize, residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("zero-magnitude magnetization at node {node}")]
    ZeroMagnitude { node: usize },

    #[error("fixed-point iteration did not converge in {} iterations (last increment {:e})", trace.len(), trace.last().copied().unwrap_or(f64::NAN))]
    PicardNotConverged { trace: Vec<f64> },

    #[error("{path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },

    #[error("cannot read {path}: {source}")]
    ReadFile { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
