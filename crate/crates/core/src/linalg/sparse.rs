//! Compressed sparse row storage.

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Row-compressed sparse matrix.
///
/// Column indices are strictly increasing within each row and all stored
/// values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_offsets: vec![0; rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    /// Builds a matrix from raw CSR arrays, validating every invariant.
    pub fn try_from_csr(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        check_len("csr row offsets", rows + 1, row_offsets.len())?;
        check_len("csr values", col_indices.len(), values.len())?;
        if row_offsets[0] != 0 || row_offsets[rows] != col_indices.len() {
            return Err(Error::InvalidParameter(
                "row offsets must start at 0 and end at nnz".into(),
            ));
        }
        for r in 0..rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::InvalidParameter(format!(
                    "row offsets decrease at row {r}"
                )));
            }
            let row = &col_indices[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "column indices not strictly increasing in row {r}"
                )));
            }
            if row.last().is_some_and(|&c| c >= cols) {
                return Err(Error::InvalidParameter(format!(
                    "column index out of range in row {r}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix value".into()));
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from a dense row-major array, dropping exact zeros.
    pub fn from_dense(rows: usize, cols: usize, dense: &[T]) -> Result<Self> {
        check_len("dense matrix", rows * cols, dense.len())?;
        let mut builder = CsrBuilder::new(cols);
        for r in 0..rows {
            for (c, &v) in dense[r * cols..(r + 1) * cols].iter().enumerate() {
                if v != T::zero() {
                    builder.push(c, v);
                }
            }
            builder.finish_row();
        }
        Ok(builder.build())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `r` in increasing column order.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_offsets[r + 1] - self.row_offsets[r]
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows * self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out[r * self.cols + c] = v;
            }
        }
        out
    }

    /// `y = A x`, each row summed in column order.
    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::zero(); self.rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        check_len("spmv input", self.cols, x.len())?;
        check_len("spmv output", self.rows, y.len())?;
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * x[c]);
        }
        Ok(())
    }

    /// `y += Aᵀ x`, accumulated row by row in ascending row order.
    pub fn spmv_transpose_add(&self, x: &[T], y: &mut [T]) -> Result<()> {
        check_len("transposed spmv input", self.rows, x.len())?;
        check_len("transposed spmv output", self.cols, y.len())?;
        for (r, &xr) in x.iter().enumerate() {
            if xr == T::zero() {
                continue;
            }
            for (c, v) in self.row(r) {
                y[c] = y[c] + v * xr;
            }
        }
        Ok(())
    }
}

/// Row-by-row CSR assembly; columns within a row must be pushed in
/// increasing order.
#[derive(Debug)]
pub struct CsrBuilder<T> {
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrBuilder<T> {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            row_offsets: vec![0],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, col: usize, value: T) {
        debug_assert!(col < self.cols);
        debug_assert!(
            self.col_indices.len() == *self.row_offsets.last().unwrap()
                || *self.col_indices.last().unwrap() < col
        );
        self.col_indices.push(col);
        self.values.push(value);
    }

    pub fn finish_row(&mut self) {
        self.row_offsets.push(self.col_indices.len());
    }

    pub fn build(self) -> CsrMatrix<T> {
        CsrMatrix {
            rows: self.row_offsets.len() - 1,
            cols: self.cols,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
        }
    }
}
