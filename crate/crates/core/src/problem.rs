//! Continuous problem description: diffusion laws, uniform grids with
//! homogeneous Dirichlet boundaries, state vectors and the Barenblatt
//! reference solution of the porous medium equation.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("time must be positive, got t = {0}")]
    NonPositiveTime(f64),
    #[error("unsupported diffusion law: {0}")]
    UnsupportedLaw(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("state length {actual} does not match grid order {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Nonlinear diffusion coefficient `D(u)` together with its derivative.
pub trait DiffusionLaw: Send + Sync {
    fn evaluate(&self, u: f64) -> f64;
    fn derivative(&self, u: f64) -> f64;
}

/// `D(u) = m u^(m-1)`, the porous medium law. `m = 1` is the heat equation.
///
/// Negative arguments are clamped to zero, so `D(u) = 0` and `D'(u) = 0`
/// for `u < 0`. At `u = 0` the one-sided derivative is returned, which is
/// infinite for `1 < m < 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    m: f64,
}

impl PowerLaw {
    pub fn new(m: f64) -> Result<Self, ProblemError> {
        if !(m.is_finite() && m >= 1.0) {
            return Err(ProblemError::UnsupportedLaw(format!(
                "power law exponent must be >= 1, got {m}"
            )));
        }
        Ok(Self { m })
    }

    pub fn exponent(&self) -> f64 {
        self.m
    }
}

impl DiffusionLaw for PowerLaw {
    fn evaluate(&self, u: f64) -> f64 {
        if self.m == 1.0 {
            return 1.0;
        }
        if u <= 0.0 {
            return 0.0;
        }
        self.m * u.powf(self.m - 1.0)
    }

    fn derivative(&self, u: f64) -> f64 {
        if self.m == 1.0 || u < 0.0 {
            return 0.0;
        }
        if u == 0.0 {
            return if self.m == 2.0 {
                2.0
            } else if self.m > 2.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        self.m * (self.m - 1.0) * u.powf(self.m - 2.0)
    }
}

/// Constant coefficient `D(u) = c`. `c = 0` gives a vanishing operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDiffusion {
    pub value: f64,
}

impl DiffusionLaw for ConstantDiffusion {
    fn evaluate(&self, _u: f64) -> f64 {
        self.value
    }

    fn derivative(&self, _u: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    One,
    Two,
}

impl Dimension {
    pub fn as_usize(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }

    pub fn from_usize(d: usize) -> Result<Self, ProblemError> {
        match d {
            1 => Ok(Dimension::One),
            2 => Ok(Dimension::Two),
            _ => Err(ProblemError::InvalidGrid(format!(
                "dimension must be 1 or 2, got {d}"
            ))),
        }
    }
}

/// Uniform grid with `N` interior points per direction and spacing
/// `h = (b - a) / (N + 1)`. Boundary nodes carry homogeneous Dirichlet data
/// and are eliminated from the unknowns.
///
/// Node indices follow the usual convention: `0` and `N + 1` are boundary
/// nodes, `1..=N` are interior. In 2D the square `[a0,a1] x [b0,b1]` must
/// have equal side lengths so both directions share `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    dimension: Dimension,
    lower: [f64; 2],
    length: f64,
    n: usize,
    h: f64,
}

impl UniformGrid {
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self, ProblemError> {
        Self::validate(a, b, n)?;
        Ok(Self {
            dimension: Dimension::One,
            lower: [a, 0.0],
            length: b - a,
            n,
            h: (b - a) / (n + 1) as f64,
        })
    }

    pub fn square(x: (f64, f64), y: (f64, f64), n: usize) -> Result<Self, ProblemError> {
        Self::validate(x.0, x.1, n)?;
        Self::validate(y.0, y.1, n)?;
        let (lx, ly) = (x.1 - x.0, y.1 - y.0);
        if (lx - ly).abs() > 1e-12 * lx.max(ly) {
            return Err(ProblemError::InvalidGrid(format!(
                "2D domain must be square, got side lengths {lx} and {ly}"
            )));
        }
        Ok(Self {
            dimension: Dimension::Two,
            lower: [x.0, y.0],
            length: lx,
            n,
            h: lx / (n + 1) as f64,
        })
    }

    /// Grid on the default domain `[-10, 10]^d`.
    pub fn standard(dimension: Dimension, n: usize) -> Result<Self, ProblemError> {
        match dimension {
            Dimension::One => Self::interval(-10.0, 10.0, n),
            Dimension::Two => Self::square((-10.0, 10.0), (-10.0, 10.0), n),
        }
    }

    fn validate(a: f64, b: f64, n: usize) -> Result<(), ProblemError> {
        if n == 0 {
            return Err(ProblemError::InvalidGrid("need at least one interior point".into()));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(ProblemError::InvalidGrid(format!("empty interval [{a}, {b}]")));
        }
        Ok(())
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn n_interior(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Number of unknowns: `N` in 1D, `N^2` in 2D.
    pub fn order(&self) -> usize {
        match self.dimension {
            Dimension::One => self.n,
            Dimension::Two => self.n * self.n,
        }
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 2] {
        [self.lower[0] + self.length, self.lower[1] + self.length]
    }

    /// Coordinate `a + xi h` of node `xi` along direction `axis`.
    /// `xi = N + 1` returns the upper endpoint exactly.
    pub fn coordinate(&self, axis: usize, xi: usize) -> f64 {
        if xi == self.n + 1 {
            return self.lower[axis] + self.length;
        }
        self.lower[axis] + xi as f64 * self.h
    }

    /// Lexicographic position of interior node `(i, j)`, `1 <= i, j <= N`:
    /// `(i - 1) + N (j - 1)`, so `i` runs fastest.
    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j));
        (i - 1) + self.n * (j - 1)
    }

    pub fn node_indices(&self, k: usize) -> (usize, usize) {
        (k % self.n + 1, k / self.n + 1)
    }

    /// Physical coordinates of the unknown stored at position `k`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        match self.dimension {
            Dimension::One => [self.coordinate(0, k + 1), 0.0],
            Dimension::Two => {
                let (i, j) = self.node_indices(k);
                [self.coordinate(0, i), self.coordinate(1, j)]
            }
        }
    }

    /// Same domain with `2N + 1` interior points, i.e. spacing `h / 2`.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n + 1,
            h: self.length / (2 * (self.n + 1)) as f64,
            ..self.clone()
        }
    }

    /// Next coarser grid `(N - 1) / 2`, defined when `N` is odd and `> 1`.
    pub fn coarsened(&self) -> Option<Self> {
        if self.n < 3 || self.n.is_multiple_of(2) {
            return None;
        }
        let n = (self.n - 1) / 2;
        Some(Self {
            n,
            h: self.length / (n + 1) as f64,
            ..self.clone()
        })
    }
}

/// Grid function at a given time, stored in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub values: Vec<f64>,
    pub time: f64,
}

impl StateVector {
    pub fn new(grid: &UniformGrid, values: Vec<f64>, time: f64) -> Result<Self, ProblemError> {
        if values.len() != grid.order() {
            return Err(ProblemError::LengthMismatch {
                expected: grid.order(),
                actual: values.len(),
            });
        }
        Ok(Self { values, time })
    }

    pub fn zeros(grid: &UniformGrid, time: f64) -> Self {
        Self {
            values: vec![0.0; grid.order()],
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Self-similar Barenblatt-Pattle solution of `u_t = div(m u^(m-1) grad u)`
/// in `d = 1, 2` space dimensions:
///
/// `u(t, x) = t^(-alpha) [1 - k |x|^2 t^(-2 beta)]_+^(1/(m-1))`
///
/// with `alpha = d / (d (m - 1) + 2)`, `beta = alpha / d` and
/// `k = (m - 1) beta / (2 m)`. For `d = 1` this is `alpha = 1/(m+1)`,
/// `k = alpha (m - 1) / (2 m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattSolution {
    m: f64,
    dimension: Dimension,
    alpha: f64,
    beta: f64,
    k: f64,
}

impl BarenblattSolution {
    pub fn new(m: f64, dimension: Dimension) -> Result<Self, ProblemError> {
        if !(m.is_finite() && m > 1.0) {
            return Err(ProblemError::UnsupportedLaw(format!(
                "Barenblatt profile requires m > 1, got {m}"
            )));
        }
        let d = dimension.as_usize() as f64;
        let alpha = d / (d * (m - 1.0) + 2.0);
        let beta = alpha / d;
        let k = (m - 1.0) * beta / (2.0 * m);
        Ok(Self {
            m,
            dimension,
            alpha,
            beta,
            k,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.m
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn law(&self) -> PowerLaw {
        PowerLaw { m: self.m }
    }

    /// Radius of the support at time `t`; the profile vanishes for `|x| >= r`.
    pub fn support_radius(&self, t: f64) -> Result<f64, ProblemError> {
        check_time(t)?;
        Ok((1.0 / self.k).sqrt() * t.powf(self.beta))
    }

    pub fn evaluate(&self, t: f64, x: &[f64]) -> Result<f64, ProblemError> {
        check_time(t)?;
        let d = self.dimension.as_usize();
        if x.len() != d {
            return Err(ProblemError::DimensionMismatch {
                expected: d,
                actual: x.len(),
            });
        }
        let r2: f64 = x.iter().map(|xi| xi * xi).sum();
        let bracket = 1.0 - self.k * r2 * t.powf(-2.0 * self.beta);
        if bracket <= 0.0 {
            return Ok(0.0);
        }
        Ok(t.powf(-self.alpha) * bracket.powf(1.0 / (self.m - 1.0)))
    }
}

fn check_time(t: f64) -> Result<(), ProblemError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(ProblemError::NonPositiveTime(t));
    }
    Ok(())
}

/// Convenience wrapper for the 1D profile.
pub fn evaluate_barenblatt(m: f64, t: f64, x: f64) -> Result<f64, ProblemError> {
    BarenblattSolution::new(m, Dimension::One)?.evaluate(t, &[x])
}

/// Samples `solution` at every interior node; boundary values are implicitly zero.
pub fn sample_on_grid(
    solution: &BarenblattSolution,
    grid: &UniformGrid,
    t: f64,
) -> Result<StateVector, ProblemError> {
    if solution.dimension() != grid.dimension() {
        return Err(ProblemError::DimensionMismatch {
            expected: grid.dimension().as_usize(),
            actual: solution.dimension().as_usize(),
        });
    }
    let d = grid.dimension().as_usize();
    let values = (0..grid.order())
        .map(|k| solution.evaluate(t, &grid.point(k)[..d]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StateVector { values, time: t })
}

/// The initial value problem handed to the time integrator.
pub struct Problem {
    pub law: Box<dyn DiffusionLaw>,
    pub initial: StateVector,
    pub exact: Option<BarenblattSolution>,
}

impl Problem {
    /// Barenblatt data sampled at `t0` on `grid`.
    pub fn barenblatt(m: f64, grid: &UniformGrid, t0: f64) -> Result<Self, ProblemError> {
        let exact = BarenblattSolution::new(m, grid.dimension())?;
        let initial = sample_on_grid(&exact, grid, t0)?;
        Ok(Self {
            law: Box::new(exact.law()),
            initial,
            exact: Some(exact),
        })
    }

    /// Errors if the exact support at `t_final` reaches the outermost interior node.
    pub fn check_support_interior(&self, grid: &UniformGrid, t_final: f64) -> Result<(), ProblemError> {
        let Some(exact) = &self.exact else {
            return Ok(());
        };
        let r = exact.support_radius(t_final)?;
        let lo = grid.lower();
        let hi = grid.upper();
        let d = grid.dimension().as_usize();
        for axis in 0..d {
            let margin = (-lo[axis]).min(hi[axis]) - grid.spacing();
            if r >= margin {
                return Err(ProblemError::InvalidGrid(format!(
                    "Barenblatt support radius {r:.4} at t = {t_final} reaches the boundary layer (margin {margin:.4})"
                )));
            }
        }
        Ok(())
    }
}
