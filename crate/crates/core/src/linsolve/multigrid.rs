use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::krylov::KrylovReport;
use super::operator::{norm2, relative_residual, Preconditioner, PreconditionerKind};
use super::sparse::CsrMatrix;
use super::LinsolveError;
use crate::discretization::StructuredMatrix;
use crate::problem::{Dimension, UniformGrid};

/// Largest per-direction point count allowed on the coarsest level.
const MAX_COARSEST_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoother {
    DampedJacobi { omega: f64 },
    GaussSeidel { omega: f64 },
    /// Gauss–Seidel sweeping nodes with `(i + j)` even first.
    RedBlackGaussSeidel { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultigridConfig {
    pub smoother: Smoother,
    pub pre_smooth: usize,
    pub post_smooth: usize,
    /// Coarsening stops once a level has at most this many points per
    /// direction.
    pub coarsest_points: usize,
}

impl MultigridConfig {
    /// Damped Jacobi (ω = 2/3) in 1D, red-black Gauss–Seidel in 2D; one
    /// pre-smoothing sweep and no post-smoothing.
    pub fn for_dimension(dimension: Dimension) -> Self {
        let smoother = match dimension {
            Dimension::One => Smoother::DampedJacobi { omega: 2.0 / 3.0 },
            Dimension::Two => Smoother::RedBlackGaussSeidel { omega: 1.0 },
        };
        Self {
            smoother,
            pre_smooth: 1,
            post_smooth: 0,
            coarsest_points: 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: CsrMatrix,
    diag: Vec<f64>,
    points: usize,
    /// Coarse-to-this-level interpolation; `None` on the coarsest level.
    prolongation: Option<CsrMatrix>,
    restriction: Option<CsrMatrix>,
    /// Nodes in sweep order for the Gauss–Seidel smoothers.
    order: Vec<usize>,
}

/// Galerkin grid hierarchy `A_{l+1} = P^T A_l P`, finest level first.
#[derive(Debug, Clone)]
pub struct MultigridHierarchy {
    levels: Vec<Level>,
    coarse: LU<f64, Dyn, Dyn>,
    config: MultigridConfig,
    dimension: Dimension,
}

/// 1D linear interpolation from `nc` coarse to `2 nc + 1` fine points.
pub fn linear_prolongation(nc: usize) -> CsrMatrix {
    let nf = 2 * nc + 1;
    let mut rows = vec![Vec::new(); nf];
    for j in 0..nc {
        rows[2 * j].push((j, 0.5));
        rows[2 * j + 1].push((j, 1.0));
        rows[2 * j + 2].push((j, 0.5));
    }
    CsrMatrix::from_rows(nc, rows)
}

/// Interpolation for the given dimension; bilinear in 2D.
pub fn prolongation(dimension: Dimension, nc: usize) -> CsrMatrix {
    let p = linear_prolongation(nc);
    match dimension {
        Dimension::One => p,
        // lexicographic index i + n j puts the y factor first
        Dimension::Two => CsrMatrix::kron(&p, &p),
    }
}

fn sweep_order(smoother: Smoother, dimension: Dimension, points: usize) -> Vec<usize> {
    let n = match dimension {
        Dimension::One => points,
        Dimension::Two => points * points,
    };
    match smoother {
        Smoother::RedBlackGaussSeidel { .. } => {
            let color = |k: usize| match dimension {
                Dimension::One => k % 2,
                Dimension::Two => (k % points + k / points) % 2,
            };
            let mut order: Vec<usize> = (0..n).filter(|&k| color(k) == 0).collect();
            order.extend((0..n).filter(|&k| color(k) == 1));
            order
        }
        _ => (0..n).collect(),
    }
}

impl MultigridHierarchy {
    pub fn new(a: &StructuredMatrix, grid: &UniformGrid, config: MultigridConfig) -> Result<Self, LinsolveError> {
        if a.order() != grid.order() {
            return Err(LinsolveError::SizeMismatch {
                expected: grid.order(),
                actual: a.order(),
            });
        }
        Self::from_csr(CsrMatrix::from_structured(a), grid.dimension(), grid.n_interior(), config)
    }

    pub fn from_csr(
        a: CsrMatrix,
        dimension: Dimension,
        points: usize,
        config: MultigridConfig,
    ) -> Result<Self, LinsolveError> {
        let omega = match config.smoother {
            Smoother::DampedJacobi { omega }
            | Smoother::GaussSeidel { omega }
            | Smoother::RedBlackGaussSeidel { omega } => omega,
        };
        if !(omega > 0.0 && omega < 2.0) {
            return Err(LinsolveError::Configuration(format!(
                "smoother damping {omega} outside (0, 2)"
            )));
        }
        if config.coarsest_points == 0 {
            return Err(LinsolveError::Configuration("coarsest level needs at least one point".into()));
        }
        let mut levels = Vec::new();
        let mut current = a;
        let mut n = points;
        while n > config.coarsest_points && n % 2 == 1 {
            let nc = (n - 1) / 2;
            let p = prolongation(dimension, nc);
            let r = p.transpose();
            let coarse = r.matmul(&current.matmul(&p));
            levels.push(Self::level(current, n, Some(p), Some(r), config.smoother, dimension)?);
            current = coarse;
            n = nc;
        }
        if n > MAX_COARSEST_POINTS.max(config.coarsest_points) {
            return Err(LinsolveError::Configuration(format!(
                "{points} points per direction cannot be coarsened to a direct solve \
                 (stuck at {n}); use N = 2^k - 1"
            )));
        }
        let dense: DMatrix<f64> = current.to_dense();
        let coarse = dense.lu();
        if !coarse.is_invertible() {
            return Err(LinsolveError::Singular);
        }
        levels.push(Self::level(current, n, None, None, config.smoother, dimension)?);
        Ok(Self {
            levels,
            coarse,
            config,
            dimension,
        })
    }

    fn level(
        a: CsrMatrix,
        points: usize,
        prolongation: Option<CsrMatrix>,
        restriction: Option<CsrMatrix>,
        smoother: Smoother,
        dimension: Dimension,
    ) -> Result<Level, LinsolveError> {
        let diag = a.diagonal();
        if prolongation.is_some() {
            if let Some(k) = diag.iter().position(|d| *d == 0.0 || !d.is_finite()) {
                return Err(LinsolveError::ZeroPivot { index: k });
            }
        }
        Ok(Level {
            order: sweep_order(smoother, dimension, points),
            a,
            diag,
            points,
            prolongation,
            restriction,
        })
    }

    pub fn config(&self) -> &MultigridConfig {
        &self.config
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn order(&self) -> usize {
        self.levels[0].a.nrows()
    }

    /// Matrix orders from finest to coarsest.
    pub fn level_orders(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.nrows()).collect()
    }

    pub fn level_points(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.points).collect()
    }

    pub fn level_matrix(&self, level: usize) -> &CsrMatrix {
        &self.levels[level].a
    }

    pub fn prolongation(&self, level: usize) -> Option<&CsrMatrix> {
        self.levels[level].prolongation.as_ref()
    }

    /// Applies `sweeps` smoothing steps on `level` to `A x = b`.
    pub fn smooth(&self, level: usize, b: &[f64], x: &mut [f64], sweeps: usize) {
        let lv = &self.levels[level];
        for _ in 0..sweeps {
            match self.config.smoother {
                Smoother::DampedJacobi { omega } => {
                    let ax = lv.a.mul_vec(x);
                    for k in 0..x.len() {
                        x[k] += omega * (b[k] - ax[k]) / lv.diag[k];
                    }
                }
                Smoother::GaussSeidel { omega } | Smoother::RedBlackGaussSeidel { omega } => {
                    for &k in &lv.order {
                        let mut s = b[k];
                        for (j, v) in lv.a.row(k) {
                            if j != k {
                                s -= v * x[j];
                            }
                        }
                        x[k] = (1.0 - omega) * x[k] + omega * s / lv.diag[k];
                    }
                }
            }
        }
    }

    fn cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        let lv = &self.levels[level];
        let (Some(p), Some(r)) = (&lv.prolongation, &lv.restriction) else {
            let sol = self
                .coarse
                .solve(&DVector::from_column_slice(b))
                .expect("coarse factor checked invertible");
            x.copy_from_slice(sol.as_slice());
            return;
        };
        self.smooth(level, b, x, self.config.pre_smooth);
        let ax = lv.a.mul_vec(x);
        let res: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rc = r.mul_vec(&res);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(level + 1, &rc, &mut ec);
        let ef = p.mul_vec(&ec);
        for (xk, ek) in x.iter_mut().zip(&ef) {
            *xk += ek;
        }
        self.smooth(level, b, x, self.config.post_smooth);
    }

    /// One V-cycle for `A x = b` starting from `x`, updated in place.
    pub fn vcycle(&self, b: &[f64], x: &mut [f64]) {
        assert_eq!(b.len(), self.order());
        assert_eq!(x.len(), self.order());
        self.cycle(0, b, x);
    }
}

pub fn build_hierarchy(
    a: &StructuredMatrix,
    grid: &UniformGrid,
    config: MultigridConfig,
) -> Result<MultigridHierarchy, LinsolveError> {
    MultigridHierarchy::new(a, grid, config)
}

/// Stationary V-cycle iteration from `x0 = 0` until the relative residual
/// drops below `tol`.
pub fn mgm_solve(
    h: &MultigridHierarchy,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, KrylovReport), LinsolveError> {
    if b.len() != h.order() {
        return Err(LinsolveError::SizeMismatch {
            expected: h.order(),
            actual: b.len(),
        });
    }
    if tol.is_nan() || tol <= 0.0 || max_iter == 0 {
        return Err(LinsolveError::Configuration(format!(
            "tolerance {tol} and iteration limit {max_iter} must be positive"
        )));
    }
    let a = &h.levels[0].a;
    let mut x = vec![0.0; b.len()];
    let mut history = vec![1.0];
    if norm2(b) == 0.0 {
        return Ok((
            x,
            KrylovReport {
                iterations: 0,
                residual_history: vec![0.0],
                converged: true,
                final_residual: 0.0,
                nonsymmetric_cg: false,
            },
        ));
    }
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iter {
        h.vcycle(b, &mut x);
        iterations += 1;
        rel = relative_residual(a, b, &x);
        history.push(rel);
        if !rel.is_finite() {
            return Err(LinsolveError::Breakdown {
                iteration: iterations,
                quantity: "V-cycle residual is not finite",
            });
        }
        if rel <= tol {
            break;
        }
    }
    Ok((
        x,
        KrylovReport {
            iterations,
            residual_history: history,
            converged: rel <= tol,
            final_residual: rel,
            nonsymmetric_cg: false,
        },
    ))
}

/// One V-cycle from a zero initial guess, a fixed linear map of `r`.
pub struct VcyclePreconditioner {
    hierarchy: MultigridHierarchy,
}

impl VcyclePreconditioner {
    pub fn new(hierarchy: MultigridHierarchy) -> Self {
        Self { hierarchy }
    }

    pub fn hierarchy(&self) -> &MultigridHierarchy {
        &self.hierarchy
    }
}

pub fn vcycle_preconditioner(hierarchy: MultigridHierarchy) -> VcyclePreconditioner {
    VcyclePreconditioner::new(hierarchy)
}

impl Preconditioner for VcyclePreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        self.hierarchy.vcycle(r, z);
    }

    fn kind(&self) -> PreconditionerKind {
        PreconditionerKind::Vcycle
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_jacobian, assemble_x_part, AssemblyContext};
    use crate::problem::{sample_on_grid, BarenblattSolution, PowerLaw};
    use std::f64::consts::PI;

    fn heat_matrix(grid: &UniformGrid, ratio: f64) -> StructuredMatrix {
        let n = grid.order();
        let unit = crate::problem::ConstantDiffusion { value: 1.0 };
        let lap = crate::discretization::assemble_operator(grid, &unit, &vec![0.0; n]).unwrap();
        StructuredMatrix::linear_combination(1.0, &StructuredMatrix::identity(n), -ratio, &lap)
    }

    #[test]
    fn constant_prolongates_to_constant() {
        let p = linear_prolongation(7);
        let f = p.mul_vec(&[1.0; 7]);
        assert_eq!(f.len(), 15);
        // boundary neighbours see one coarse node plus the ghost zero
        assert_eq!(f[0], 0.5);
        assert_eq!(f[14], 0.5);
        assert!(f[1..14].iter().all(|v| *v == 1.0));
        let p2 = prolongation(Dimension::Two, 3);
        assert_eq!((p2.nrows(), p2.ncols()), (49, 9));
        let f2 = p2.mul_vec(&[1.0; 9]);
        // interior fine node (i, j) = (2, 2), 0-based, lies mid-cell
        assert!((f2[2 + 7 * 2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn galerkin_of_identity_is_mass_matrix() {
        let p = linear_prolongation(3);
        let id = CsrMatrix::from_structured(&StructuredMatrix::identity(7));
        let g = p.transpose().matmul(&id.matmul(&p)).to_dense();
        let pd = p.to_dense();
        assert_eq!(g, pd.transpose() * pd);
        assert_eq!(g[(0, 0)], 1.5);
        assert_eq!(g[(0, 1)], 0.25);
    }

    #[test]
    fn hierarchy_orders() {
        let g1 = UniformGrid::standard(Dimension::One, 7).unwrap();
        let h1 = MultigridHierarchy::new(&heat_matrix(&g1, 1.0), &g1, MultigridConfig::for_dimension(Dimension::One)).unwrap();
        assert_eq!(h1.level_orders(), vec![7, 3, 1]);
        let g2 = UniformGrid::standard(Dimension::Two, 7).unwrap();
        let h2 = MultigridHierarchy::new(&heat_matrix(&g2, 1.0), &g2, MultigridConfig::for_dimension(Dimension::Two)).unwrap();
        assert_eq!(h2.level_orders(), vec![49, 9, 1]);
        // coarse 2D operators are nine-point
        assert_eq!(h2.level_matrix(1).row(4).count(), 9);
    }

    #[test]
    fn non_coarsenable_size_is_rejected() {
        let g = UniformGrid::standard(Dimension::One, 10).unwrap();
        let err = MultigridHierarchy::new(&heat_matrix(&g, 1.0), &g, MultigridConfig::for_dimension(Dimension::One)).unwrap_err();
        assert!(matches!(err, LinsolveError::Configuration(_)));
    }

    #[test]
    fn galerkin_laplacian_is_scaled_coarse_laplacian() {
        // P^T (tridiag(-1, 2, -1)) P = (1/2) tridiag(-1, 2, -1) on the coarse grid
        let g = UniformGrid::standard(Dimension::One, 15).unwrap();
        let lap = heat_matrix(&g, 1.0);
        let lap = StructuredMatrix::linear_combination(1.0, &lap, -1.0, &StructuredMatrix::identity(15));
        let h = MultigridHierarchy::new(&lap, &g, MultigridConfig::for_dimension(Dimension::One)).unwrap();
        let c = h.level_matrix(1).to_dense();
        for i in 0..7 {
            assert!((c[(i, i)] - 1.0).abs() < 1e-14);
            if i + 1 < 7 {
                assert!((c[(i, i + 1)] + 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn jacobi_damps_oscillatory_modes_by_a_third() {
        let n = 31;
        let g = UniformGrid::standard(Dimension::One, n).unwrap();
        let lap = StructuredMatrix::tridiagonal(vec![-1.0; n - 1], vec![2.0; n], vec![-1.0; n - 1]);
        let h = MultigridHierarchy::new(&lap, &g, MultigridConfig::for_dimension(Dimension::One)).unwrap();
        for k in n.div_ceil(2)..=n {
            let mut e: Vec<f64> = (1..=n).map(|i| (k as f64 * PI * i as f64 / (n + 1) as f64).sin()).collect();
            let before = norm2(&e);
            h.smooth(0, &vec![0.0; n], &mut e, 1);
            assert!(norm2(&e) / before <= 1.0 / 3.0 + 1e-12, "mode {k}");
        }
    }

    #[test]
    fn vcycle_is_linear_in_rhs() {
        let g = UniformGrid::standard(Dimension::Two, 15).unwrap();
        let a = heat_matrix(&g, 2.0);
        let h = MultigridHierarchy::new(&a, &g, MultigridConfig::for_dimension(Dimension::Two)).unwrap();
        let pc = vcycle_preconditioner(h);
        let n = g.order();
        let r1: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
        let r2: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).cos()).collect();
        let comb: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let (mut z1, mut z2, mut zc) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        pc.apply(&r1, &mut z1);
        pc.apply(&r2, &mut z2);
        pc.apply(&comb, &mut zc);
        for k in 0..n {
            assert!((zc[k] - (2.0 * z1[k] - 3.0 * z2[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn mgm_solves_jacobian_and_symmetric_part_systems() {
        for dim in [Dimension::One, Dimension::Two] {
            let n = if dim == Dimension::One { 127 } else { 31 };
            let g = UniformGrid::standard(dim, n).unwrap();
            let h = g.spacing();
            let exact = BarenblattSolution::new(2.0, dim).unwrap();
            let u = sample_on_grid(&exact, &g, 1.0 / 32.0).unwrap().values;
            let law = PowerLaw::new(2.0).unwrap();
            let ctx = AssemblyContext::new(&g, &law, h, &u).unwrap();
            // the 2D Jacobian at this under-resolved front defeats the plain V-cycle
            let a = match dim {
                Dimension::One => assemble_jacobian(&ctx, &u).unwrap(),
                Dimension::Two => assemble_x_part(&ctx, &u).unwrap(),
            };
            let mh = MultigridHierarchy::new(&a, &g, MultigridConfig::for_dimension(dim)).unwrap();
            let b = vec![1.0; g.order()];
            let (x, rep) = mgm_solve(&mh, &b, 1e-7, 100).unwrap();
            assert!(rep.converged, "{dim:?}: {rep:?}");
            assert!(relative_residual(&a, &b, &x) <= 1e-7);
        }
    }
}
