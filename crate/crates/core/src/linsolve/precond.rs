use super::multigrid::{mgm_solve, MultigridConfig, MultigridHierarchy};
use super::operator::{Preconditioner, PreconditionerKind};
use super::thomas::TridiagonalFactor;
use super::LinsolveError;
use crate::discretization::{assemble_x_part, AssemblyContext};
use crate::problem::Dimension;

enum Inverse {
    Exact(TridiagonalFactor),
    Inner {
        hierarchy: MultigridHierarchy,
        tol: f64,
        max_iter: usize,
    },
}

/// Inverse of the symmetric part `X_N = I - (dt/h^2) L_D(u)` of the Jacobian.
///
/// Exact (Thomas) in 1D. In 2D each application runs V-cycles on `X_N` until
/// the relative residual is below the inner tolerance, so the map is only
/// approximately linear.
pub struct SymmetricPartPreconditioner {
    inverse: Inverse,
}

impl SymmetricPartPreconditioner {
    pub fn new(
        ctx: &AssemblyContext<'_>,
        u: &[f64],
        inner_tol: f64,
        multigrid: Option<MultigridConfig>,
    ) -> Result<Self, LinsolveError> {
        let x = assemble_x_part(ctx, u)?;
        let inverse = match ctx.grid.dimension() {
            Dimension::One => Inverse::Exact(TridiagonalFactor::new(&x)?),
            Dimension::Two => {
                if inner_tol.is_nan() || inner_tol <= 0.0 {
                    return Err(LinsolveError::Configuration(format!(
                        "inner tolerance {inner_tol} must be positive"
                    )));
                }
                let cfg = multigrid.unwrap_or_else(|| MultigridConfig::for_dimension(Dimension::Two));
                Inverse::Inner {
                    hierarchy: MultigridHierarchy::new(&x, ctx.grid, cfg)?,
                    tol: inner_tol,
                    max_iter: 200,
                }
            }
        };
        Ok(Self { inverse })
    }
}

pub fn symmetric_part_preconditioner(
    ctx: &AssemblyContext<'_>,
    u: &[f64],
) -> Result<SymmetricPartPreconditioner, LinsolveError> {
    SymmetricPartPreconditioner::new(ctx, u, super::DEFAULT_INNER_TOL, None)
}

impl Preconditioner for SymmetricPartPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match &self.inverse {
            Inverse::Exact(f) => f.solve_into(r, z),
            Inverse::Inner {
                hierarchy,
                tol,
                max_iter,
            } => match mgm_solve(hierarchy, r, *tol, *max_iter) {
                Ok((x, rep)) => {
                    if !rep.converged {
                        log::warn!(
                            "inner symmetric-part solve stopped at residual {:.2e}",
                            rep.final_residual
                        );
                    }
                    z.copy_from_slice(&x);
                }
                Err(e) => {
                    log::warn!("inner symmetric-part solve failed: {e}");
                    z.copy_from_slice(r);
                }
            },
        }
    }

    fn kind(&self) -> PreconditionerKind {
        PreconditionerKind::SymmetricPart
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_jacobian, assemble_operator, StructuredMatrix};
    use crate::linsolve::{cg_solve, gmres_solve, KrylovConfig, TridiagonalPreconditioner};
    use crate::problem::{sample_on_grid, BarenblattSolution, PowerLaw, UniformGrid};

    #[test]
    fn shifted_laplacian_gives_identical_iterations() {
        // With dt = h, X_N = (dt/h^2) (-L + h I): same Krylov iterates.
        let g = UniformGrid::standard(Dimension::One, 127).unwrap();
        let h = g.spacing();
        let exact = BarenblattSolution::new(3.0, Dimension::One).unwrap();
        let u = sample_on_grid(&exact, &g, 1.0 / 32.0).unwrap().values;
        let law = PowerLaw::new(3.0).unwrap();
        let ctx = AssemblyContext::new(&g, &law, h, &u).unwrap();
        let a = assemble_jacobian(&ctx, &u).unwrap();
        let b: Vec<f64> = (0..g.order()).map(|k| ((k as f64) * 0.1).sin() + 0.5).collect();

        let sym = symmetric_part_preconditioner(&ctx, &u).unwrap();
        let l = assemble_operator(&g, &law, &u).unwrap();
        let p = StructuredMatrix::linear_combination(-1.0, &l, h, &StructuredMatrix::identity(g.order()));
        let pn = TridiagonalPreconditioner::new(&p, PreconditionerKind::SymmetricPart).unwrap();

        let cfg = KrylovConfig::default();
        let (_, r1) = gmres_solve(&a, &b, &sym, &cfg).unwrap();
        let (_, r2) = gmres_solve(&a, &b, &pn, &cfg).unwrap();
        assert_eq!(r1.iterations, r2.iterations);
        for (x, y) in r1.residual_history.iter().zip(&r2.residual_history) {
            assert!((x - y).abs() <= 1e-9 * x.max(1e-300), "{x} vs {y}");
        }
        let (_, c1) = cg_solve(&a, &b, &sym, &cfg).unwrap();
        let (_, c2) = cg_solve(&a, &b, &pn, &cfg).unwrap();
        assert_eq!(c1.iterations, c2.iterations);
        assert!(r1.iterations <= 12, "{}", r1.iterations);
    }

    #[test]
    fn two_dimensional_inner_solve_is_accurate() {
        let g = UniformGrid::standard(Dimension::Two, 15).unwrap();
        let law = PowerLaw::new(2.0).unwrap();
        let exact = BarenblattSolution::new(2.0, Dimension::Two).unwrap();
        let u = sample_on_grid(&exact, &g, 1.0 / 32.0).unwrap().values;
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        let pc = SymmetricPartPreconditioner::new(&ctx, &u, 1e-10, None).unwrap();
        let x = assemble_x_part(&ctx, &u).unwrap();
        let r: Vec<f64> = (0..g.order()).map(|k| (k % 7) as f64 - 3.0).collect();
        let mut z = vec![0.0; g.order()];
        pc.apply(&r, &mut z);
        assert!(crate::linsolve::relative_residual(&x, &r, &z) <= 1e-10);
    }
}
