//! Finite-difference discretization of `div(D(u) grad u)` on uniform grids
//! and the nonlinear residual / Jacobian of one implicit Euler step.

mod assembly;
mod matrix;

pub use assembly::{
    antisymmetric_part, assemble_difference_matrix, assemble_jacobian, assemble_operator,
    assemble_x_part, assemble_y_part, assemble_y_tilde, midpoint_coefficients, residual,
    symmetric_part, AssemblyContext, AssemblyError, EdgeCoefficients,
};
pub use matrix::{MatrixKind, StructuredMatrix, DENSE_ORDER_LIMIT};
