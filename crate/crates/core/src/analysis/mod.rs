//! Error norms, order fitting, the finite-difference Jacobian oracle and
//! dense spectral diagnostics.

mod convergence;
mod fd;
mod spectral;

use thiserror::Error;

use crate::discretization::AssemblyError;

pub use convergence::{fit_iteration_growth, fit_order, grid_error, least_squares_slope, ConvergenceRow, ConvergenceTable, ErrorNorms};
pub use fd::{fd_jacobian, fd_jacobian_at, relative_frobenius_error};
pub use spectral::{
    spectral_report, spectral_report_dense, verify_sigma_min_bound, BendixsonRectangle, ClusterTarget, SigmaMinBound, SpectralDiagnostics,
    CLUSTER_EPSILONS, SPECTRAL_ORDER_LIMIT,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("expected length {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("cannot take the logarithm of {0}")]
    NonPositive(f64),
    #[error("order {order} exceeds the dense limit {limit}")]
    Guard { order: usize, limit: usize },
    #[error("dense {0} did not converge")]
    EigenFailure(&'static str),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}
