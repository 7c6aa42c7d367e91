use super::operator::{dot, norm2, relative_residual, LinearOperator, Preconditioner};
use super::LinsolveError;

/// Outcome of an iterative linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Relative residual estimates, starting with the initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Recomputed `||b - A x|| / ||b||` for the returned iterate.
    pub final_residual: f64,
    /// Set when CG was run on an operator reported as nonsymmetric.
    pub nonsymmetric_cg: bool,
}

impl KrylovReport {
    fn trivial(residual: f64) -> Self {
        Self {
            iterations: 0,
            residual_history: vec![residual],
            converged: true,
            final_residual: residual,
            nonsymmetric_cg: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// GMRES restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 5000,
            restart: None,
        }
    }
}

fn check_sizes(a: &(impl LinearOperator + ?Sized), b: &[f64], cfg: &KrylovConfig) -> Result<(), LinsolveError> {
    if b.len() != a.order() {
        return Err(LinsolveError::SizeMismatch {
            expected: a.order(),
            actual: b.len(),
        });
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 || cfg.max_iter == 0 {
        return Err(LinsolveError::Configuration(format!(
            "tolerance {} and iteration limit {} must be positive",
            cfg.tol, cfg.max_iter
        )));
    }
    if cfg.restart == Some(0) {
        return Err(LinsolveError::Configuration("restart length must be positive".into()));
    }
    Ok(())
}

/// Preconditioned conjugate gradients from `x0 = 0`.
///
/// Division by a vanishing `p·Ap` or `r·z` is reported as
/// [`LinsolveError::Breakdown`], distinct from running out of iterations.
pub fn cg_solve(
    a: &(impl LinearOperator + ?Sized),
    b: &[f64],
    precond: &(impl Preconditioner + ?Sized),
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, KrylovReport), LinsolveError> {
    check_sizes(a, b, cfg)?;
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, KrylovReport::trivial(0.0)));
    }
    let nonsymmetric = a.symmetry_hint() == Some(false);
    if nonsymmetric {
        log::debug!("conjugate gradients applied to a nonsymmetric operator");
    }

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !pq.is_finite() || pq.abs() <= 1e-14 * norm2(&p) * norm2(&q) {
            return Err(LinsolveError::Breakdown {
                iteration: iterations + 1,
                quantity: "p·Ap vanished",
            });
        }
        let alpha = rz / pq;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        iterations += 1;
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= cfg.tol {
            converged = true;
            break;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        if !rz_new.is_finite() || rz_new.abs() <= 1e-14 * norm2(&r) * norm2(&z) {
            return Err(LinsolveError::Breakdown {
                iteration: iterations,
                quantity: "r·z vanished",
            });
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }

    let final_residual = relative_residual(a, b, &x);
    Ok((
        x,
        KrylovReport {
            iterations,
            residual_history: history,
            converged,
            final_residual,
            nonsymmetric_cg: nonsymmetric,
        },
    ))
}

/// Right-preconditioned GMRES from `x0 = 0` with modified Gram–Schmidt and
/// Givens rotations.
///
/// Convergence is accepted only after the true residual of the assembled
/// iterate is rechecked; if it lags the recurrence the method restarts from
/// the current iterate.
pub fn gmres_solve(
    a: &(impl LinearOperator + ?Sized),
    b: &[f64],
    precond: &(impl Preconditioner + ?Sized),
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, KrylovReport), LinsolveError> {
    check_sizes(a, b, cfg)?;
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, KrylovReport::trivial(0.0)));
    }
    let cycle_len = cfg.restart.unwrap_or(cfg.max_iter).min(cfg.max_iter).max(1);

    let mut history = vec![1.0];
    let mut iterations = 0;
    let mut converged = false;
    let mut work = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut true_rel = 1.0;

    while iterations < cfg.max_iter {
        // r = b - A x
        a.apply(&x, &mut work);
        let r: Vec<f64> = b.iter().zip(&work).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        true_rel = beta / bnorm;
        if true_rel <= cfg.tol {
            converged = true;
            break;
        }
        let m = cycle_len.min(cfg.max_iter - iterations);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns after rotation, i.e. the R factor.
        let mut hcols: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![beta];
        let mut hit_tol = false;

        for j in 0..m {
            precond.apply(&basis[j], &mut z);
            let mut w = vec![0.0; n];
            a.apply(&z, &mut w);
            let wnorm0 = norm2(&w);
            let mut h = Vec::with_capacity(j + 2);
            for v in &basis {
                let hij = dot(&w, v);
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
                h.push(hij);
            }
            let hnext = norm2(&w);
            h.push(hnext);
            if !hnext.is_finite() {
                return Err(LinsolveError::Breakdown {
                    iteration: iterations + 1,
                    quantity: "Arnoldi norm is not finite",
                });
            }
            for i in 0..j {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let rho = h[j].hypot(h[j + 1]);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (h[j] / rho, h[j + 1] / rho) };
            h[j] = rho;
            h[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.truncate(j + 1);
            hcols.push(h);
            iterations += 1;
            let est = g[j + 1].abs() / bnorm;
            history.push(est);
            // invariant subspace reached: the estimate is exact
            let lucky = hnext <= 1e-14 * wnorm0.max(f64::MIN_POSITIVE);
            if est <= cfg.tol || lucky {
                hit_tol = true;
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }

        // back substitution R y = g
        let k = hcols.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in i + 1..k {
                s -= hcols[l][i] * y[l];
            }
            if hcols[i][i] == 0.0 {
                return Err(LinsolveError::Breakdown {
                    iteration: iterations,
                    quantity: "Hessenberg pivot vanished",
                });
            }
            y[i] = s / hcols[i][i];
        }
        work.iter_mut().for_each(|v| *v = 0.0);
        for (yi, v) in y.iter().zip(&basis) {
            for (wk, vk) in work.iter_mut().zip(v) {
                *wk += yi * vk;
            }
        }
        precond.apply(&work, &mut z);
        for (xk, zk) in x.iter_mut().zip(&z) {
            *xk += zk;
        }
        true_rel = relative_residual(a, b, &x);
        if true_rel <= cfg.tol {
            converged = true;
            break;
        }
        if hit_tol {
            log::debug!(
                "GMRES recurrence residual {:.3e} but true residual {:.3e}; restarting",
                history.last().copied().unwrap_or(f64::NAN),
                true_rel
            );
        }
    }

    Ok((
        x,
        KrylovReport {
            iterations,
            residual_history: history,
            converged,
            final_residual: true_rel,
            nonsymmetric_cg: false,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::StructuredMatrix;
    use crate::linsolve::{IdentityPreconditioner, PreconditionerKind, TridiagonalPreconditioner};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian(n: usize, shift: f64) -> StructuredMatrix {
        StructuredMatrix::tridiagonal(vec![-1.0; n - 1], vec![2.0 + shift; n], vec![-1.0; n - 1])
    }

    fn convection(n: usize) -> StructuredMatrix {
        StructuredMatrix::tridiagonal(vec![-1.3; n - 1], vec![3.0; n], vec![-0.4; n - 1])
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = StructuredMatrix::identity(10);
        let b: Vec<f64> = (0..10).map(|k| k as f64 - 3.0).collect();
        let cfg = KrylovConfig::default();
        for (x, rep) in [
            gmres_solve(&a, &b, &IdentityPreconditioner, &cfg).unwrap(),
            cg_solve(&a, &b, &IdentityPreconditioner, &cfg).unwrap(),
        ] {
            assert_eq!(rep.iterations, 1);
            assert!(rep.converged);
            for k in 0..10 {
                assert!((x[k] - b[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = laplacian(5, 0.0);
        let (x, rep) = gmres_solve(&a, &[0.0; 5], &IdentityPreconditioner, &KrylovConfig::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gmres_matches_dense_solution_and_history_is_monotone() {
        let a = convection(60);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = KrylovConfig {
            tol: 1e-10,
            ..Default::default()
        };
        let (x, rep) = gmres_solve(&a, &b, &IdentityPreconditioner, &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let est = *rep.residual_history.last().unwrap();
        assert!((est - rep.final_residual).abs() < 1e-8);
        let dense = a.to_dense().unwrap().lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for k in 0..60 {
            assert!((x[k] - dense[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn gmres_terminates_within_order_steps() {
        let a = convection(12);
        let b = vec![1.0; 12];
        let cfg = KrylovConfig {
            tol: 1e-13,
            ..Default::default()
        };
        let (_, rep) = gmres_solve(&a, &b, &IdentityPreconditioner, &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 12);
    }

    #[test]
    fn restarted_gmres_converges() {
        let a = convection(80);
        let b = vec![1.0; 80];
        let cfg = KrylovConfig {
            tol: 1e-9,
            restart: Some(5),
            ..Default::default()
        };
        let (x, rep) = gmres_solve(&a, &b, &IdentityPreconditioner, &cfg).unwrap();
        assert!(rep.converged);
        assert!(relative_residual(&a, &b, &x) <= 1e-9);
    }

    #[test]
    fn exact_preconditioner_converges_immediately() {
        let a = convection(40);
        let m = TridiagonalPreconditioner::new(&a, PreconditionerKind::SymmetricPart).unwrap();
        let b = vec![1.0; 40];
        let (_, rep) = gmres_solve(&a, &b, &m, &KrylovConfig::default()).unwrap();
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn cg_on_spd_matches_dense() {
        let a = laplacian(50, 0.1);
        let b: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).sin()).collect();
        let cfg = KrylovConfig {
            tol: 1e-11,
            ..Default::default()
        };
        let (x, rep) = cg_solve(&a, &b, &IdentityPreconditioner, &cfg).unwrap();
        assert!(rep.converged && !rep.nonsymmetric_cg);
        assert!(rep.final_residual <= 1e-10);
        let dense = a.to_dense().unwrap().lu().solve(&DVector::from_vec(b)).unwrap();
        for k in 0..50 {
            assert!((x[k] - dense[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn cg_flags_nonsymmetric_operator() {
        let a = convection(10);
        let (_, rep) = cg_solve(&a, &[1.0; 10], &IdentityPreconditioner, &KrylovConfig::default()).unwrap();
        assert!(rep.nonsymmetric_cg);
    }

    #[test]
    fn cg_breakdown_is_distinct_from_non_convergence() {
        // p·Ap = 0 for p = (1, 1) with a skew matrix
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let err = cg_solve(&a, &[1.0, 1.0], &IdentityPreconditioner, &KrylovConfig::default()).unwrap_err();
        assert!(matches!(err, LinsolveError::Breakdown { .. }));

        let spd = laplacian(200, 0.0);
        let cfg = KrylovConfig {
            max_iter: 3,
            ..Default::default()
        };
        let (_, rep) = cg_solve(&spd, &vec![1.0; 200], &IdentityPreconditioner, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn invalid_configuration_rejected() {
        let a = laplacian(4, 0.0);
        let cfg = KrylovConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            gmres_solve(&a, &[1.0; 4], &IdentityPreconditioner, &cfg),
            Err(LinsolveError::Configuration(_))
        ));
        assert!(matches!(
            cg_solve(&a, &[1.0; 3], &IdentityPreconditioner, &KrylovConfig::default()),
            Err(LinsolveError::SizeMismatch { .. })
        ));
    }
}
