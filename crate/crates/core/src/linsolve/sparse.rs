//! Minimal compressed-row storage used for grid transfers and Galerkin
//! coarse operators (which leave the five-point pattern in 2D).

use crate::discretization::StructuredMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists; columns are sorted and
    /// duplicates summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < ncols, "column {c} out of range");
                if last == Some(c) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn from_structured(a: &StructuredMatrix) -> Self {
        let rows = (0..a.order()).map(|i| a.row(i).collect()).collect();
        Self::from_rows(a.order(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(p) => self.data[span.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(self.nrows, rows)
    }

    /// Sparse product `self * other` with a dense row accumulator.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0; other.ncols];
        let mut marker = vec![usize::MAX; other.ncols];
        let mut rows = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            let mut cols = Vec::new();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            rows.push(cols.into_iter().map(|j| (j, acc[j])).collect());
        }
        Self::from_rows(other.ncols, rows)
    }

    /// Kronecker product `a ⊗ b`; row index `ia * b.nrows + ib`.
    pub fn kron(a: &Self, b: &Self) -> Self {
        let mut rows = Vec::with_capacity(a.nrows * b.nrows);
        for ia in 0..a.nrows {
            for ib in 0..b.nrows {
                let mut row = Vec::new();
                for (ja, va) in a.row(ia) {
                    for (jb, vb) in b.row(ib) {
                        row.push((ja * b.ncols + jb, va * vb));
                    }
                }
                rows.push(row);
            }
        }
        Self::from_rows(a.ncols * b.ncols, rows)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_transpose_match_dense() {
        let a = CsrMatrix::from_rows(3, vec![vec![(0, 1.0), (2, 2.0)], vec![(1, -1.0)], vec![(0, 3.0), (0, 1.0)]]);
        let b = CsrMatrix::from_rows(2, vec![vec![(1, 4.0)], vec![(0, 2.0), (1, 1.0)], vec![(0, -1.0)]]);
        let c = a.matmul(&b).to_dense();
        let cd = a.to_dense() * b.to_dense();
        assert_eq!(c, cd);
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
        assert_eq!(a.get(2, 0), 4.0);
        let k = CsrMatrix::kron(&a, &b).to_dense();
        assert_eq!(k, a.to_dense().kronecker(&b.to_dense()));
    }
}
