use super::operator::{Preconditioner, PreconditionerKind};
use super::LinsolveError;
use crate::discretization::{MatrixKind, StructuredMatrix};

/// LU factors of a tridiagonal matrix without pivoting (Thomas algorithm).
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn new(a: &StructuredMatrix) -> Result<Self, LinsolveError> {
        if a.kind() != MatrixKind::Tridiagonal {
            return Err(LinsolveError::Configuration(
                "Thomas algorithm needs a tridiagonal matrix".into(),
            ));
        }
        let n = a.order();
        let main = a.diagonal();
        let lower = a.band(-1).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n.saturating_sub(1)]);
        let upper = a.band(1).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n.saturating_sub(1)]);
        let mut inv_pivot = Vec::with_capacity(n);
        let mut prev_mult = 0.0;
        for k in 0..n {
            let pivot = if k == 0 {
                main[0]
            } else {
                main[k] - lower[k - 1] * prev_mult
            };
            let scale = main[k].abs()
                + if k > 0 { lower[k - 1].abs() } else { 0.0 }
                + if k + 1 < n { upper[k].abs() } else { 0.0 };
            if !pivot.is_finite() || pivot.abs() <= f64::EPSILON * scale || pivot == 0.0 {
                return Err(LinsolveError::ZeroPivot { index: k });
            }
            let inv = 1.0 / pivot;
            inv_pivot.push(inv);
            if k + 1 < n {
                prev_mult = upper[k] * inv;
            }
        }
        Ok(Self {
            lower,
            upper,
            inv_pivot,
        })
    }

    pub fn order(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.order();
        assert_eq!(b.len(), n);
        // forward: y_k = (b_k - l_{k-1} y_{k-1}) / p_k
        for k in 0..n {
            let carry = if k > 0 { self.lower[k - 1] * x[k - 1] } else { 0.0 };
            x[k] = (b[k] - carry) * self.inv_pivot[k];
        }
        // backward: x_k = y_k - (u_k / p_k) x_{k+1}
        for k in (0..n.saturating_sub(1)).rev() {
            x[k] -= self.upper[k] * self.inv_pivot[k] * x[k + 1];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.solve_into(b, &mut x);
        x
    }
}

pub fn thomas_solve(a: &StructuredMatrix, b: &[f64]) -> Result<Vec<f64>, LinsolveError> {
    if b.len() != a.order() {
        return Err(LinsolveError::SizeMismatch {
            expected: a.order(),
            actual: b.len(),
        });
    }
    Ok(TridiagonalFactor::new(a)?.solve(b))
}

/// Exact inverse of a tridiagonal matrix used as preconditioner.
pub struct TridiagonalPreconditioner {
    factor: TridiagonalFactor,
    kind: PreconditionerKind,
}

impl TridiagonalPreconditioner {
    pub fn new(m: &StructuredMatrix, kind: PreconditionerKind) -> Result<Self, LinsolveError> {
        Ok(Self {
            factor: TridiagonalFactor::new(m)?,
            kind,
        })
    }
}

impl Preconditioner for TridiagonalPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.factor.solve_into(r, z);
    }

    fn kind(&self) -> PreconditionerKind {
        self.kind
    }
}
