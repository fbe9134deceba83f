//! Trajectory metrics and small-signal analysis.

mod linear;
mod metrics;

pub use linear::{dae_jacobians, eigenvalues, linearize, reduce, DaeJacobians, Spectrum, LINEARIZE_STEP};
pub use metrics::{compute_metrics, Bands, Metrics};

use thiserror::Error;

use crate::engine::EngineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("algebraic Jacobian g_y is singular")]
    SingularAlgebraic,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("eigenvalue iteration did not converge")]
    EigenNonConvergence,
    #[error("simulation result is incomplete")]
    Incomplete,
    #[error("simulation result is empty")]
    Empty,
}
