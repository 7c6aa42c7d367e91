use std::io::{self, Write};

use nalgebra::DMatrix;

/// Largest order accepted by [`StructuredMatrix::to_dense`].
pub const DENSE_ORDER_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Tridiagonal,
    /// Main diagonal, `±1` and `±stride` (2D lexicographic five-point pattern).
    FiveDiagonal { stride: usize },
    Banded,
}

/// Square matrix stored by diagonals.
///
/// The band with offset `k` holds `order - |k|` values; its `t`-th entry is
/// `A[r, r + k]` with `r = t + max(0, -k)`. Entries outside the stored
/// bands are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMatrix {
    order: usize,
    offsets: Vec<isize>,
    bands: Vec<Vec<f64>>,
}

fn normalize_offsets(order: usize, offsets: &[isize]) -> Vec<isize> {
    let mut v: Vec<isize> = offsets
        .iter()
        .copied()
        .filter(|k| k.unsigned_abs() < order)
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

impl StructuredMatrix {
    pub fn zeros(order: usize, offsets: &[isize]) -> Self {
        let offsets = normalize_offsets(order, offsets);
        let bands = offsets
            .iter()
            .map(|k| vec![0.0; order - k.unsigned_abs()])
            .collect();
        Self {
            order,
            offsets,
            bands,
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::diagonal_matrix(vec![1.0; order])
    }

    pub fn diagonal_matrix(diag: Vec<f64>) -> Self {
        Self {
            order: diag.len(),
            offsets: vec![0],
            bands: vec![diag],
        }
    }

    /// `tridiag[lower, main, upper]` with `lower[t] = A[t+1, t]`, `upper[t] = A[t, t+1]`.
    pub fn tridiagonal(lower: Vec<f64>, main: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = main.len();
        assert_eq!(lower.len(), n.saturating_sub(1));
        assert_eq!(upper.len(), n.saturating_sub(1));
        if n <= 1 {
            return Self::diagonal_matrix(main);
        }
        Self {
            order: n,
            offsets: vec![-1, 0, 1],
            bands: vec![lower, main, upper],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn offsets(&self) -> &[isize] {
        &self.offsets
    }

    pub fn kind(&self) -> MatrixKind {
        match self.offsets.as_slice() {
            [-1, 0, 1] | [0] => MatrixKind::Tridiagonal,
            &[a, -1, 0, 1, b] if a == -b && b > 1 => MatrixKind::FiveDiagonal {
                stride: b as usize,
            },
            _ => MatrixKind::Banded,
        }
    }

    fn band_index(&self, offset: isize) -> Option<usize> {
        self.offsets.binary_search(&offset).ok()
    }

    pub fn band(&self, offset: isize) -> Option<&[f64]> {
        self.band_index(offset).map(|b| self.bands[b].as_slice())
    }

    pub fn band_mut(&mut self, offset: isize) -> Option<&mut [f64]> {
        self.band_index(offset).map(|b| self.bands[b].as_mut_slice())
    }

    /// Iterates `(offset, band)` pairs in ascending offset order.
    pub fn bands(&self) -> impl Iterator<Item = (isize, &[f64])> {
        self.offsets
            .iter()
            .copied()
            .zip(self.bands.iter().map(|b| b.as_slice()))
    }

    fn slot(&self, row: usize, col: usize) -> Option<(usize, usize)> {
        let k = col as isize - row as isize;
        let b = self.band_index(k)?;
        let t = if k >= 0 { row } else { col };
        Some((b, t))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.order && col < self.order);
        self.slot(row, col)
            .map_or(0.0, |(b, t)| self.bands[b][t])
    }

    /// Adds `value` to `A[row, col]`. Panics if the position lies outside the bands.
    pub fn add_at(&mut self, row: usize, col: usize, value: f64) {
        let (b, t) = self
            .slot(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside stored bands"));
        self.bands[b][t] += value;
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let (b, t) = self
            .slot(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside stored bands"));
        self.bands[b][t] = value;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.band(0)
            .map(|d| d.to_vec())
            .unwrap_or_else(|| vec![0.0; self.order])
    }

    /// Nonzero-pattern row view: `(col, value)` for every stored entry of `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.bands().filter_map(move |(k, band)| {
            let col = row as isize + k;
            if col < 0 || col as usize >= self.order {
                return None;
            }
            let t = if k >= 0 { row } else { col as usize };
            Some((col as usize, band[t]))
        })
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.order);
        assert_eq!(y.len(), self.order);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (k, band) in self.bands() {
            let (r0, c0) = if k >= 0 { (0, k as usize) } else { ((-k) as usize, 0) };
            for (t, a) in band.iter().enumerate() {
                y[r0 + t] += a * x[c0 + t];
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.order];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let offsets: Vec<isize> = self.offsets.iter().rev().map(|k| -k).collect();
        let bands = self.bands.iter().rev().cloned().collect();
        Self {
            order: self.order,
            offsets,
            bands,
        }
    }

    /// `alpha A + beta B`, on the union of both band patterns.
    pub fn linear_combination(alpha: f64, a: &Self, beta: f64, b: &Self) -> Self {
        assert_eq!(a.order, b.order);
        let mut offsets = a.offsets.clone();
        offsets.extend_from_slice(&b.offsets);
        let mut out = Self::zeros(a.order, &offsets);
        for (scale, src) in [(alpha, a), (beta, b)] {
            for (k, band) in src.bands() {
                let dst = out.band_mut(k).expect("offset present in union");
                for (d, s) in dst.iter_mut().zip(band) {
                    *d += scale * s;
                }
            }
        }
        out
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.bands
            .iter_mut()
            .flat_map(|b| b.iter_mut())
            .for_each(|v| *v *= alpha);
        out
    }

    /// `(A + A^T) / 2`.
    pub fn symmetric_part(&self) -> Self {
        Self::linear_combination(0.5, self, 0.5, &self.transpose())
    }

    /// `(A - A^T) / 2`.
    pub fn antisymmetric_part(&self) -> Self {
        Self::linear_combination(0.5, self, -0.5, &self.transpose())
    }

    /// Exact entrywise symmetry test.
    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric_within(0.0)
    }

    pub fn is_symmetric_within(&self, tol: f64) -> bool {
        (0..self.order).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    pub fn is_skew_symmetric(&self) -> bool {
        (0..self.order).all(|i| self.row(i).all(|(j, v)| v == -self.get(j, i)))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.order)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.bands
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.bands.iter().flat_map(|b| b.iter()).all(|v| v.is_finite())
    }

    pub fn count_nonzeros(&self) -> usize {
        self.bands
            .iter()
            .flat_map(|b| b.iter())
            .filter(|v| **v != 0.0)
            .count()
    }

    /// Dense copy for diagnostics; `None` above [`DENSE_ORDER_LIMIT`].
    pub fn to_dense(&self) -> Option<DMatrix<f64>> {
        if self.order > DENSE_ORDER_LIMIT {
            return None;
        }
        let mut m = DMatrix::zeros(self.order, self.order);
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        Some(m)
    }

    /// Plain-text coordinate dump: one `row col value` line per stored
    /// nonzero, 1-based indices, preceded by a `#` header.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# order {} nonzeros {}", self.order, self.count_nonzeros())?;
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                if v != 0.0 {
                    writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
                }
            }
        }
        Ok(())
    }
}
