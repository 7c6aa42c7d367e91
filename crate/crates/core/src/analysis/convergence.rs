use super::AnalysisError;
use crate::problem::{StateVector, UniformGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `sqrt(h^d * sum(diff^2))`.
    pub l2: f64,
    pub linf: f64,
}

/// Grid-scaled discrete errors between two states on `grid`.
pub fn grid_error(grid: &UniformGrid, num: &StateVector, exact: &StateVector) -> Result<ErrorNorms, AnalysisError> {
    for v in [num, exact] {
        if v.len() != grid.order() {
            return Err(AnalysisError::SizeMismatch {
                expected: grid.order(),
                actual: v.len(),
            });
        }
    }
    let cell = grid.spacing().powi(grid.dimension().as_usize() as i32);
    let (mut sum, mut linf) = (0.0, 0.0f64);
    for (a, b) in num.values.iter().zip(&exact.values) {
        let d = a - b;
        sum += d * d;
        linf = linf.max(d.abs());
    }
    Ok(ErrorNorms {
        l2: (cell * sum).sqrt(),
        linf,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Result<f64, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(x, y) in points {
        for v in [x, y] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AnalysisError::NonPositive(v));
            }
        }
        logs.push((x.ln(), y.ln()));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::TooFewPoints { needed: 2, got: 1 });
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub error_l2: f64,
    pub error_linf: f64,
}

/// Errors across a refinement chain, kept sorted by `N`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTable {
    rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: ConvergenceRow) {
        let at = self.rows.partition_point(|r| r.n <= row.n);
        self.rows.insert(at, row);
    }

    pub fn rows(&self) -> &[ConvergenceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fitted order of the max-norm error.
    pub fn slope_linf(&self) -> Result<f64, AnalysisError> {
        let pts: Vec<_> = self.rows.iter().map(|r| (r.h, r.error_linf)).collect();
        least_squares_slope(&pts)
    }
}

impl FromIterator<ConvergenceRow> for ConvergenceTable {
    fn from_iter<I: IntoIterator<Item = ConvergenceRow>>(iter: I) -> Self {
        let mut t = Self::new();
        for r in iter {
            t.push(r);
        }
        t
    }
}

/// Least-squares order of the l2 error with respect to `h`.
pub fn fit_order(table: &ConvergenceTable) -> Result<f64, AnalysisError> {
    let pts: Vec<_> = table.rows.iter().map(|r| (r.h, r.error_l2)).collect();
    least_squares_slope(&pts)
}

/// Exponent `q` of a fit `iterations ~ N^q`.
pub fn fit_iteration_growth(points: &[(usize, f64)]) -> Result<f64, AnalysisError> {
    let pts: Vec<_> = points.iter().map(|&(n, it)| (n as f64, it)).collect();
    least_squares_slope(&pts)
}
