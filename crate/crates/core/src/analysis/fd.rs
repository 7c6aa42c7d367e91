use nalgebra::DMatrix;

use super::AnalysisError;
use crate::discretization::{residual, AssemblyContext, AssemblyError, DENSE_ORDER_LIMIT};
use crate::problem::Dimension;

/// Dense central-difference Jacobian of `f` at `u`.
///
/// Column `j` uses the step `scale * max(1, |u_j|)`; pass
/// `f64::EPSILON.sqrt()` for the usual choice.
pub fn fd_jacobian<F>(f: F, u: &[f64], scale: f64) -> Result<DMatrix<f64>, AnalysisError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, AssemblyError>,
{
    let n = u.len();
    if n > DENSE_ORDER_LIMIT {
        return Err(AnalysisError::Guard {
            order: n,
            limit: DENSE_ORDER_LIMIT,
        });
    }
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = u.to_vec();
    for j in 0..n {
        let s = scale * u[j].abs().max(1.0);
        let (up, um) = (u[j] + s, u[j] - s);
        probe[j] = up;
        let fp = f(&probe)?;
        probe[j] = um;
        let fm = f(&probe)?;
        probe[j] = u[j];
        if fp.len() != n || fm.len() != n {
            return Err(AnalysisError::SizeMismatch {
                expected: n,
                actual: fp.len().min(fm.len()),
            });
        }
        // divide by the representable step, not the requested one
        let width = up - um;
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / width;
        }
    }
    Ok(jac)
}

/// Finite-difference Jacobian of the implicit-step residual of `ctx`.
///
/// Limited to `N <= 512` in 1D and `N <= 32` per direction in 2D.
pub fn fd_jacobian_at(ctx: &AssemblyContext<'_>, u: &[f64]) -> Result<DMatrix<f64>, AnalysisError> {
    let n = ctx.grid.n_interior();
    let limit = match ctx.grid.dimension() {
        Dimension::One => 512,
        Dimension::Two => 32,
    };
    if n > limit {
        return Err(AnalysisError::Guard { order: n, limit });
    }
    fd_jacobian(|v| residual(ctx, v), u, f64::EPSILON.sqrt())
}

/// `||a - b||_F / ||b||_F`, or the absolute difference when `b = 0`.
pub fn relative_frobenius_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::assemble_jacobian;
    use crate::problem::{PowerLaw, UniformGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn affine_map_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 9;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let f = |v: &[f64]| {
            let y = &m * nalgebra::DVector::from_column_slice(v);
            Ok(y.iter().zip(&b).map(|(a, c)| a + c).collect())
        };
        let j = fd_jacobian(f, &u, f64::EPSILON.sqrt()).unwrap();
        // evaluation roundoff over a sqrt(eps) step
        let e = relative_frobenius_error(&j, &m);
        assert!(e <= 5e-8, "{e}");
        let zero = vec![0.0; n];
        let g = |v: &[f64]| Ok((&m * nalgebra::DVector::from_column_slice(v)).iter().copied().collect());
        let j0 = fd_jacobian(g, &zero, f64::EPSILON.sqrt()).unwrap();
        assert!(relative_frobenius_error(&j0, &m) <= 1e-9);
    }

    #[test]
    fn matches_assembled_jacobian_1d() {
        let g = UniformGrid::standard(Dimension::One, 8).unwrap();
        let law = PowerLaw::new(2.0).unwrap();
        let u: Vec<f64> = (0..8).map(|k| 0.3 + 0.1 * k as f64).collect();
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        let fd = fd_jacobian_at(&ctx, &u).unwrap();
        let an = assemble_jacobian(&ctx, &u).unwrap().to_dense().unwrap();
        assert!(relative_frobenius_error(&fd, &an) <= 1e-6);
    }

    #[test]
    fn guard() {
        let g = UniformGrid::standard(Dimension::Two, 33).unwrap();
        let law = PowerLaw::new(2.0).unwrap();
        let u = vec![0.0; g.order()];
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        assert!(matches!(fd_jacobian_at(&ctx, &u), Err(AnalysisError::Guard { .. })));
    }
}
