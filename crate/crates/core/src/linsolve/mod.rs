//! Krylov, multigrid and direct solvers for the Newton systems.

mod krylov;
mod multigrid;
mod operator;
mod precond;
mod sparse;
mod thomas;

use thiserror::Error;

use crate::discretization::{AssemblyContext, AssemblyError, StructuredMatrix};

pub use krylov::{cg_solve, gmres_solve, KrylovConfig, KrylovReport};
pub use multigrid::{
    build_hierarchy, linear_prolongation, mgm_solve, prolongation, vcycle_preconditioner, MultigridConfig,
    MultigridHierarchy, Smoother, VcyclePreconditioner,
};
pub use operator::{
    relative_residual, IdentityPreconditioner, LinearOperator, Preconditioner, PreconditionerKind, Scaled,
};
pub use precond::{symmetric_part_preconditioner, SymmetricPartPreconditioner};
pub use sparse::CsrMatrix;
pub use thomas::{thomas_solve, TridiagonalFactor, TridiagonalPreconditioner};

/// Relative tolerance of the inner solve behind the 2D symmetric-part
/// preconditioner.
pub const DEFAULT_INNER_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinsolveError {
    #[error("breakdown at iteration {iteration}: {quantity}")]
    Breakdown { iteration: usize, quantity: &'static str },
    #[error("zero pivot at row {index}")]
    ZeroPivot { index: usize },
    #[error("singular coarse-grid matrix")]
    Singular,
    #[error("expected length {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("invalid solver configuration: {0}")]
    Configuration(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Gmres,
    Cg,
    Mgm,
}

impl std::str::FromStr for SolverKind {
    type Err = LinsolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gmres" => Ok(Self::Gmres),
            "cg" => Ok(Self::Cg),
            "mgm" => Ok(Self::Mgm),
            other => Err(LinsolveError::Configuration(format!("unknown solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gmres => "gmres",
            Self::Cg => "cg",
            Self::Mgm => "mgm",
        })
    }
}

impl std::str::FromStr for PreconditionerKind {
    type Err = LinsolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "symmetric-part" | "symmetric" => Ok(Self::SymmetricPart),
            "vcycle" | "v-cycle" => Ok(Self::Vcycle),
            other => Err(LinsolveError::Configuration(format!("unknown preconditioner '{other}'"))),
        }
    }
}

impl std::fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::SymmetricPart => "symmetric-part",
            Self::Vcycle => "vcycle",
        })
    }
}

/// Solver and preconditioner selection for the Newton systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolverConfig {
    pub solver: SolverKind,
    pub preconditioner: PreconditionerKind,
    pub krylov: KrylovConfig,
    /// Overrides the per-dimension multigrid defaults.
    pub multigrid: Option<MultigridConfig>,
    pub inner_tol: f64,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        Self {
            solver: SolverKind::Gmres,
            preconditioner: PreconditionerKind::None,
            krylov: KrylovConfig::default(),
            multigrid: None,
            inner_tol: DEFAULT_INNER_TOL,
        }
    }
}

impl LinearSolverConfig {
    pub fn new(solver: SolverKind, preconditioner: PreconditionerKind) -> Self {
        Self {
            solver,
            preconditioner,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LinsolveError> {
        if self.solver == SolverKind::Mgm && self.preconditioner != PreconditionerKind::None {
            return Err(LinsolveError::Configuration(format!(
                "multigrid is a stand-alone solver and takes no '{}' preconditioner",
                self.preconditioner
            )));
        }
        if self.krylov.tol.is_nan() || self.krylov.tol <= 0.0 || self.krylov.max_iter == 0 {
            return Err(LinsolveError::Configuration(
                "linear tolerance and iteration limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Solves the Jacobian system `J s = rhs` built at iterate `u`.
pub fn solve_jacobian_system(
    ctx: &AssemblyContext<'_>,
    u: &[f64],
    jacobian: &StructuredMatrix,
    rhs: &[f64],
    config: &LinearSolverConfig,
) -> Result<(Vec<f64>, KrylovReport), LinsolveError> {
    config.validate()?;
    let mg = || {
        config
            .multigrid
            .unwrap_or_else(|| MultigridConfig::for_dimension(ctx.grid.dimension()))
    };
    let run = |pc: &dyn Preconditioner| match config.solver {
        SolverKind::Gmres => gmres_solve(jacobian, rhs, pc, &config.krylov),
        SolverKind::Cg => cg_solve(jacobian, rhs, pc, &config.krylov),
        SolverKind::Mgm => unreachable!("validated above"),
    };
    if config.solver == SolverKind::Mgm {
        let h = MultigridHierarchy::new(jacobian, ctx.grid, mg())?;
        return mgm_solve(&h, rhs, config.krylov.tol, config.krylov.max_iter);
    }
    match config.preconditioner {
        PreconditionerKind::None => run(&IdentityPreconditioner),
        PreconditionerKind::SymmetricPart => {
            let pc = SymmetricPartPreconditioner::new(ctx, u, config.inner_tol, config.multigrid)?;
            run(&pc)
        }
        PreconditionerKind::Vcycle => {
            let pc = vcycle_preconditioner(MultigridHierarchy::new(jacobian, ctx.grid, mg())?);
            run(&pc)
        }
    }
}
