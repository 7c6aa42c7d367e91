use thiserror::Error;

use super::matrix::StructuredMatrix;
use crate::problem::{Dimension, DiffusionLaw, UniformGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("vector length {actual} does not match grid order {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("{0}")]
    NotSquare(String),
}

/// Everything the implicit step needs besides the current iterate.
#[derive(Clone, Copy)]
pub struct AssemblyContext<'a> {
    pub grid: &'a UniformGrid,
    pub law: &'a dyn DiffusionLaw,
    pub dt: f64,
    pub previous: &'a [f64],
}

impl<'a> AssemblyContext<'a> {
    pub fn new(
        grid: &'a UniformGrid,
        law: &'a dyn DiffusionLaw,
        dt: f64,
        previous: &'a [f64],
    ) -> Result<Self, AssemblyError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(AssemblyError::InvalidStep(dt));
        }
        check_len(grid, previous)?;
        Ok(Self {
            grid,
            law,
            dt,
            previous,
        })
    }

    /// `dt / h^2`.
    pub fn ratio(&self) -> f64 {
        let h = self.grid.spacing();
        self.dt / (h * h)
    }
}

fn check_len(grid: &UniformGrid, u: &[f64]) -> Result<(), AssemblyError> {
    if u.len() != grid.order() {
        return Err(AssemblyError::SizeMismatch {
            expected: grid.order(),
            actual: u.len(),
        });
    }
    Ok(())
}

fn check_state(grid: &UniformGrid, u: &[f64]) -> Result<(), AssemblyError> {
    check_len(grid, u)?;
    match u.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(AssemblyError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Arithmetic-mean edge coefficients `D_{j+1/2} = (D(u_j) + D(u_{j+1})) / 2`,
/// boundary edges included (boundary values are zero).
///
/// 1D: `x` holds `N + 1` edges, `x[e]` sits between nodes `e` and `e + 1`.
/// 2D: `x[(j-1)(N+1) + i]` is `D_{i+1/2, j}` for `i = 0..=N`, `j = 1..=N`;
/// `y[j N + (i-1)]` is `D_{i, j+1/2}` for `i = 1..=N`, `j = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCoefficients {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl EdgeCoefficients {
    /// `D_{i+1/2, j}` with node indices (`i` in `0..=N`).
    pub fn x_edge(&self, i: usize, j: usize) -> f64 {
        if self.y.is_empty() {
            self.x[i]
        } else {
            self.x[(j - 1) * (self.n + 1) + i]
        }
    }

    /// `D_{i, j+1/2}` with node indices (`j` in `0..=N`).
    pub fn y_edge(&self, i: usize, j: usize) -> f64 {
        self.y[j * self.n + (i - 1)]
    }
}

/// Grid function values with ghost zeros at boundary nodes, addressed by
/// node indices.
struct Padded<'a> {
    n: usize,
    u: &'a [f64],
}

impl Padded<'_> {
    fn at1(&self, xi: usize) -> f64 {
        if xi == 0 || xi == self.n + 1 {
            0.0
        } else {
            self.u[xi - 1]
        }
    }

    fn at2(&self, i: usize, j: usize) -> f64 {
        if i == 0 || j == 0 || i == self.n + 1 || j == self.n + 1 {
            0.0
        } else {
            self.u[(i - 1) + self.n * (j - 1)]
        }
    }
}

pub fn midpoint_coefficients(
    grid: &UniformGrid,
    law: &dyn DiffusionLaw,
    u: &[f64],
) -> Result<EdgeCoefficients, AssemblyError> {
    check_state(grid, u)?;
    let n = grid.n_interior();
    let p = Padded { n, u };
    let d1 = |xi: usize| law.evaluate(p.at1(xi));
    let d2 = |i: usize, j: usize| law.evaluate(p.at2(i, j));
    Ok(match grid.dimension() {
        Dimension::One => EdgeCoefficients {
            n,
            x: (0..=n).map(|e| 0.5 * (d1(e) + d1(e + 1))).collect(),
            y: Vec::new(),
        },
        Dimension::Two => {
            let mut x = Vec::with_capacity(n * (n + 1));
            for j in 1..=n {
                for i in 0..=n {
                    x.push(0.5 * (d2(i, j) + d2(i + 1, j)));
                }
            }
            let mut y = Vec::with_capacity(n * (n + 1));
            for j in 0..=n {
                for i in 1..=n {
                    y.push(0.5 * (d2(i, j) + d2(i, j + 1)));
                }
            }
            EdgeCoefficients { n, x, y }
        }
    })
}

/// Visits each unknown `k` with its interior and boundary neighbours.
/// The callback receives `(k, neighbour, edge_coefficient)` where
/// `neighbour` is `None` for an eliminated boundary node.
fn for_each_edge(
    grid: &UniformGrid,
    edges: &EdgeCoefficients,
    mut f: impl FnMut(usize, Option<usize>, f64),
) {
    let n = grid.n_interior();
    match grid.dimension() {
        Dimension::One => {
            for k in 0..n {
                f(k, k.checked_sub(1), edges.x[k]);
                f(k, (k + 1 < n).then_some(k + 1), edges.x[k + 1]);
            }
        }
        Dimension::Two => {
            for j in 1..=n {
                for i in 1..=n {
                    let k = grid.flat_index(i, j);
                    f(k, (i > 1).then(|| k - 1), edges.x_edge(i - 1, j));
                    f(k, (i < n).then_some(k + 1), edges.x_edge(i, j));
                    f(k, (j > 1).then(|| k - n), edges.y_edge(i, j - 1));
                    f(k, (j < n).then_some(k + n), edges.y_edge(i, j));
                }
            }
        }
    }
}

fn stencil_offsets(grid: &UniformGrid) -> Vec<isize> {
    let n = grid.n_interior() as isize;
    match grid.dimension() {
        Dimension::One => vec![-1, 0, 1],
        Dimension::Two => vec![-n, -1, 0, 1, n],
    }
}

/// `L_D(u)`: tridiagonal in 1D, five-point in 2D, such that `(1/h^2) L_D(u) u`
/// approximates `div(D(u) grad u)`.
pub fn assemble_operator(
    grid: &UniformGrid,
    law: &dyn DiffusionLaw,
    u: &[f64],
) -> Result<StructuredMatrix, AssemblyError> {
    let edges = midpoint_coefficients(grid, law, u)?;
    let mut l = StructuredMatrix::zeros(grid.order(), &stencil_offsets(grid));
    for_each_edge(grid, &edges, |k, nb, d| {
        l.add_at(k, k, -d);
        if let Some(nb) = nb {
            l.add_at(k, nb, d);
        }
    });
    Ok(l)
}

/// `F(u) = u - (dt/h^2) L_D(u) u - u_prev`.
pub fn residual(ctx: &AssemblyContext<'_>, u: &[f64]) -> Result<Vec<f64>, AssemblyError> {
    let lu = assemble_operator(ctx.grid, ctx.law, u)?.mul_vec(u);
    let r = ctx.ratio();
    Ok(u
        .iter()
        .zip(&lu)
        .zip(ctx.previous)
        .map(|((ui, li), pi)| ui - r * li - pi)
        .collect())
}

/// `X_N(u) = I - (dt/h^2) L_D(u)`, the symmetric positive definite part of the Jacobian.
pub fn assemble_x_part(ctx: &AssemblyContext<'_>, u: &[f64]) -> Result<StructuredMatrix, AssemblyError> {
    let l = assemble_operator(ctx.grid, ctx.law, u)?;
    Ok(StructuredMatrix::linear_combination(
        1.0,
        &StructuredMatrix::identity(l.order()),
        -ctx.ratio(),
        &l,
    ))
}

/// Difference matrix `T(u)`: 1D `tridiag[u_{k-1}-u_k, u_{k-1}-2u_k+u_{k+1}, u_{k+1}-u_k]`,
/// 2D its five-point analogue. With `with_diagonal = false` the main diagonal is
/// dropped, giving the anti-symmetric-pattern variant `T~`.
pub fn assemble_difference_matrix(
    grid: &UniformGrid,
    u: &[f64],
    with_diagonal: bool,
) -> Result<StructuredMatrix, AssemblyError> {
    check_state(grid, u)?;
    let n = grid.n_interior();
    let p = Padded { n, u };
    let mut t = StructuredMatrix::zeros(grid.order(), &stencil_offsets(grid));
    let mut visit = |k: usize, nb: Option<usize>, nb_value: f64| {
        let diff = nb_value - u[k];
        if with_diagonal {
            t.add_at(k, k, diff);
        }
        if let Some(nb) = nb {
            t.add_at(k, nb, diff);
        }
    };
    match grid.dimension() {
        Dimension::One => {
            for k in 0..n {
                visit(k, k.checked_sub(1), p.at1(k));
                visit(k, (k + 1 < n).then_some(k + 1), p.at1(k + 2));
            }
        }
        Dimension::Two => {
            for j in 1..=n {
                for i in 1..=n {
                    let k = grid.flat_index(i, j);
                    visit(k, (i > 1).then(|| k - 1), p.at2(i - 1, j));
                    visit(k, (i < n).then_some(k + 1), p.at2(i + 1, j));
                    visit(k, (j > 1).then(|| k - n), p.at2(i, j - 1));
                    visit(k, (j < n).then_some(k + n), p.at2(i, j + 1));
                }
            }
        }
    }
    Ok(t)
}

fn derivative_column_scaling(
    ctx: &AssemblyContext<'_>,
    t: &StructuredMatrix,
    u: &[f64],
) -> Result<StructuredMatrix, AssemblyError> {
    let dprime: Vec<f64> = u.iter().map(|&v| ctx.law.derivative(v)).collect();
    let scale = -0.5 * ctx.ratio();
    let mut y = StructuredMatrix::zeros(t.order(), t.offsets());
    for row in 0..t.order() {
        for (col, v) in t.row(row) {
            if v != 0.0 {
                y.set(row, col, scale * v * dprime[col]);
            }
        }
    }
    match (0..y.order()).find(|&r| y.row(r).any(|(_, v)| !v.is_finite())) {
        Some(index) => Err(AssemblyError::NonFinite { index }),
        None => Ok(y),
    }
}

/// `Y_N(u) = -(dt / (2h^2)) T(u) diag(D'(u_k))`, the nonsymmetric Jacobian correction.
pub fn assemble_y_part(ctx: &AssemblyContext<'_>, u: &[f64]) -> Result<StructuredMatrix, AssemblyError> {
    let t = assemble_difference_matrix(ctx.grid, u, true)?;
    derivative_column_scaling(ctx, &t, u)
}

/// `Y~_N(u)`: as [`assemble_y_part`] with the diagonal of `T` removed.
pub fn assemble_y_tilde(ctx: &AssemblyContext<'_>, u: &[f64]) -> Result<StructuredMatrix, AssemblyError> {
    let t = assemble_difference_matrix(ctx.grid, u, false)?;
    derivative_column_scaling(ctx, &t, u)
}

/// Exact Jacobian `F'(u) = X_N(u) + Y_N(u)`.
pub fn assemble_jacobian(ctx: &AssemblyContext<'_>, u: &[f64]) -> Result<StructuredMatrix, AssemblyError> {
    let x = assemble_x_part(ctx, u)?;
    let y = assemble_y_part(ctx, u)?;
    let mut j = x;
    for (k, band) in y.bands() {
        let dst = j.band_mut(k).expect("Y shares the stencil pattern of X");
        for (d, s) in dst.iter_mut().zip(band) {
            *d += s;
        }
    }
    Ok(j)
}

pub fn symmetric_part(a: &StructuredMatrix) -> StructuredMatrix {
    a.symmetric_part()
}

pub fn antisymmetric_part(a: &StructuredMatrix) -> StructuredMatrix {
    a.antisymmetric_part()
}
