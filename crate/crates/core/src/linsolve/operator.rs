use nalgebra::DMatrix;

use super::sparse::CsrMatrix;
use crate::discretization::StructuredMatrix;

/// Square linear map `x -> A x`.
pub trait LinearOperator {
    fn order(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `Some(false)` when the operator is known to be nonsymmetric.
    fn symmetry_hint(&self) -> Option<bool> {
        None
    }
}

impl LinearOperator for StructuredMatrix {
    fn order(&self) -> usize {
        StructuredMatrix::order(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }

    fn symmetry_hint(&self) -> Option<bool> {
        Some(self.is_symmetric_within(1e-14 * self.norm_inf()))
    }
}

impl LinearOperator for CsrMatrix {
    fn order(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

impl LinearOperator for DMatrix<f64> {
    fn order(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Operator scaled by a constant, `c A`.
pub struct Scaled<'a, A: LinearOperator + ?Sized> {
    pub inner: &'a A,
    pub factor: f64,
}

impl<A: LinearOperator + ?Sized> LinearOperator for Scaled<'_, A> {
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        y.iter_mut().for_each(|v| *v *= self.factor);
    }

    fn symmetry_hint(&self) -> Option<bool> {
        self.inner.symmetry_hint()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreconditionerKind {
    None,
    SymmetricPart,
    Vcycle,
}

/// Approximate inverse `z = M^{-1} r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);

    fn kind(&self) -> PreconditionerKind;
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }

    fn kind(&self) -> PreconditionerKind {
        PreconditionerKind::None
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `||b - A x|| / ||b||`, or `||b - A x||` when `b = 0`.
pub fn relative_residual(a: &(impl LinearOperator + ?Sized), b: &[f64], x: &[f64]) -> f64 {
    let mut ax = vec![0.0; b.len()];
    a.apply(x, &mut ax);
    let r: f64 = b
        .iter()
        .zip(&ax)
        .map(|(bi, axi)| (bi - axi) * (bi - axi))
        .sum::<f64>()
        .sqrt();
    let bn = norm2(b);
    if bn > 0.0 {
        r / bn
    } else {
        r
    }
}
