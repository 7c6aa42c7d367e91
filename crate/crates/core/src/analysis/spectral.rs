use faer::complex_native::c64;
use faer::{Mat, Side};
use nalgebra::{Complex, DMatrix};

use super::AnalysisError;
use crate::discretization::StructuredMatrix;
use crate::linsolve::Preconditioner;

/// Largest order accepted by the dense spectral routines.
pub const SPECTRAL_ORDER_LIMIT: usize = 256;

/// Radii at which cluster counts are reported.
pub const CLUSTER_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.02];

/// Set around which eigenvalue clustering is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterTarget {
    Point(f64),
    /// Real interval `[a, b]`.
    Interval(f64, f64),
}

impl ClusterTarget {
    pub fn distance(&self, z: Complex<f64>) -> f64 {
        match *self {
            Self::Point(p) => (z - Complex::new(p, 0.0)).norm(),
            Self::Interval(a, b) => (z.re - z.re.clamp(a, b)).hypot(z.im),
        }
    }
}

/// `[re_min, re_max] x i [-mu, mu]` from the symmetric and skew parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendixsonRectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_bound: f64,
}

impl BendixsonRectangle {
    pub fn contains(&self, z: Complex<f64>, tol: f64) -> bool {
        z.re >= self.re_min - tol && z.re <= self.re_max + tol && z.im.abs() <= self.im_bound + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagnostics {
    pub eigenvalues: Vec<Complex<f64>>,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub lambda_min_sym: f64,
    pub lambda_max_sym: f64,
    pub rectangle: BendixsonRectangle,
    pub target: ClusterTarget,
    /// `(eps, q_eps)`: eigenvalues farther than `eps` from the target.
    pub clusters: Vec<(f64, usize)>,
}

impl SpectralDiagnostics {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Spectral condition number `sigma_max / sigma_min`.
    pub fn condition_number(&self) -> f64 {
        self.sigma_max() / self.sigma_min()
    }

    pub fn outliers(&self, eps: f64) -> usize {
        self.eigenvalues.iter().filter(|z| self.target.distance(**z) > eps).count()
    }

    pub fn outside_fraction(&self, eps: f64) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        self.outliers(eps) as f64 / self.order() as f64
    }

    /// Eigenvalues outside the Bendixson rectangle enlarged by `tol`.
    pub fn bendixson_violations(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|z| !self.rectangle.contains(**z, tol)).count()
    }
}

fn guard(order: usize) -> Result<(), AnalysisError> {
    if order > SPECTRAL_ORDER_LIMIT {
        return Err(AnalysisError::Guard {
            order,
            limit: SPECTRAL_ORDER_LIMIT,
        });
    }
    Ok(())
}

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn finite(v: &[f64], what: &'static str) -> Result<(), AnalysisError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(AnalysisError::EigenFailure(what))
    }
}

fn symmetric_extremes(a: &DMatrix<f64>) -> Result<(f64, f64), AnalysisError> {
    let h = to_faer(&((a + a.transpose()) * 0.5));
    let e = h.selfadjoint_eigenvalues(Side::Lower);
    finite(&e, "symmetric eigensolver")?;
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>, AnalysisError> {
    let mut v = to_faer(a).singular_values();
    finite(&v, "SVD")?;
    v.sort_by(|x, y| y.total_cmp(x));
    Ok(v)
}

fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, AnalysisError> {
    let e: Vec<c64> = to_faer(a).eigenvalues();
    let mut out: Vec<Complex<f64>> = e.iter().map(|z| Complex::new(z.re, z.im)).collect();
    if !out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(AnalysisError::EigenFailure("eigensolver"));
    }
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(out)
}

/// Dense spectral diagnostics of `A`, or of `M^{-1} A` when a preconditioner
/// is given.
///
/// The cluster target defaults to `{1}` with a preconditioner and to the
/// hull of the symmetric part's spectrum without one.
pub fn spectral_report(
    a: &StructuredMatrix,
    precond: Option<&dyn Preconditioner>,
    target: Option<ClusterTarget>,
) -> Result<SpectralDiagnostics, AnalysisError> {
    let n = a.order();
    guard(n)?;
    let dense = a.to_dense().ok_or(AnalysisError::Guard {
        order: n,
        limit: SPECTRAL_ORDER_LIMIT,
    })?;
    let op = match precond {
        None => dense,
        Some(m) => {
            let mut out = DMatrix::zeros(n, n);
            let mut z = vec![0.0; n];
            for j in 0..n {
                let col: Vec<f64> = dense.column(j).iter().copied().collect();
                m.apply(&col, &mut z);
                out.column_mut(j).copy_from_slice(&z);
            }
            out
        }
    };
    let target = target.or(precond.map(|_| ClusterTarget::Point(1.0)));
    spectral_report_dense(&op, target)
}

/// [`spectral_report`] on an explicit dense matrix.
pub fn spectral_report_dense(
    a: &DMatrix<f64>,
    target: Option<ClusterTarget>,
) -> Result<SpectralDiagnostics, AnalysisError> {
    let n = a.nrows();
    guard(n)?;
    if a.ncols() != n {
        return Err(AnalysisError::SizeMismatch {
            expected: n,
            actual: a.ncols(),
        });
    }
    let eigenvalues = eigenvalues(a)?;

    let (lambda_min_sym, lambda_max_sym) = symmetric_extremes(a)?;
    let skew = (a - a.transpose()) * 0.5;
    let im_bound = singular_values(&skew)?.first().copied().unwrap_or(0.0);
    let singular_values = singular_values(a)?;
    let target = target.unwrap_or(ClusterTarget::Interval(lambda_min_sym, lambda_max_sym));
    let clusters = CLUSTER_EPSILONS
        .iter()
        .map(|&eps| (eps, eigenvalues.iter().filter(|z| target.distance(**z) > eps).count()))
        .collect();
    Ok(SpectralDiagnostics {
        eigenvalues,
        singular_values,
        lambda_min_sym,
        lambda_max_sym,
        rectangle: BendixsonRectangle {
            re_min: lambda_min_sym,
            re_max: lambda_max_sym,
            im_bound,
        },
        target,
        clusters,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaMinBound {
    pub sigma_min: f64,
    pub lambda_min_sym: f64,
    /// `sigma_min >= lambda_min_sym - 1e-10`.
    pub holds: bool,
}

/// Checks `sigma_min(A) >= lambda_min((A + A^T) / 2)`.
pub fn verify_sigma_min_bound(a: &DMatrix<f64>) -> Result<SigmaMinBound, AnalysisError> {
    let n = a.nrows();
    guard(n)?;
    if a.ncols() != n {
        return Err(AnalysisError::SizeMismatch {
            expected: n,
            actual: a.ncols(),
        });
    }
    let sigma_min = singular_values(a)?.last().copied().unwrap_or(0.0);
    let (lambda_min_sym, _) = symmetric_extremes(a)?;
    Ok(SigmaMinBound {
        sigma_min,
        lambda_min_sym,
        holds: sigma_min >= lambda_min_sym - 1e-10,
    })
}
