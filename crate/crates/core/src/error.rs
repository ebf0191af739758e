use thiserror::Error;

use crate::germ::NewtonStep;

/// Errors raised across the pipeline. Each variant carries enough payload for
/// the report writer to surface it without re-running the failing step.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh would have {vertices} vertices, above the budget of {budget}")]
    Resource { vertices: usize, budget: usize },

    #[error("mesh quality: face {face}: {reason}")]
    MeshQuality { face: usize, reason: String },

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("no spectral gap of ratio >= {required} among singular values {singular_values:?}")]
    IndeterminateKernel {
        required: f64,
        singular_values: Vec<f64>,
    },

    #[error("linear solve failed ({detail}), residual {residual:e}")]
    LinearSolve { residual: f64, detail: String },

    #[error("newton did not converge in {} iterations", trace.len())]
    NonConvergence { trace: Vec<NewtonStep> },

    #[error("line search stagnated after {} iterations", trace.len())]
    Stagnation { trace: Vec<NewtonStep> },

    #[error("singular or indefinite linearization at iteration {iteration}; refine the mesh or shrink the data")]
    IndefiniteLinearization { iteration: usize },

    #[error("no solution: {0}")]
    Unsolvable(String),

    #[error("solution did not converge; refusing to use it")]
    StaleSolution,

    #[error("structural identity violated: {0}")]
    Structure(String),

    #[error("both classes vanish; the orbit is degenerate")]
    DegenerateOrbit,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
