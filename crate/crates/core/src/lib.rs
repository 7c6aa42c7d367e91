//! Fully implicit finite-difference solver for degenerate parabolic
//! equations `u_t = div(D(u) grad u)` in one and two space dimensions.
//!
//! Each implicit Euler step is solved by Newton's method; the Jacobian
//! systems go to CG, GMRES or a Galerkin V-cycle multigrid, optionally
//! preconditioned by the symmetric part of the Jacobian or by one V-cycle.
//! The [`analysis`] module holds the verification instruments (error norms,
//! order fits, finite-difference Jacobians, dense spectral diagnostics).

pub mod analysis;
pub mod cli;
pub mod discretization;
pub mod linsolve;
pub mod newton;
pub mod problem;
