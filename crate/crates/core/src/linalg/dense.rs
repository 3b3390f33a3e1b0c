//! Dense Cholesky factorization for the fixed X-update system.

use crate::basis::ObservationBlocks;
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular factor `L` with `M = L Lᵀ`, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    lower: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors a symmetric positive-definite row-major matrix. Only the lower
    /// triangle is read.
    pub fn factor(n: usize, mut m: Vec<T>) -> Result<Self> {
        check_len("cholesky input", n * n, m.len())?;
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (i * n, j * n);
                let s = (0..j).fold(m[ri + j], |acc, k| acc - m[ri + k] * m[rj + k]);
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "matrix is not numerically positive definite (pivot {i})"
                        )));
                    }
                    m[ri + i] = s.sqrt();
                } else {
                    m[ri + j] = s / m[rj + j];
                }
            }
            for k in i + 1..n {
                m[i * n + k] = T::zero();
            }
        }
        Ok(Self { n, lower: m })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) -> Result<()> {
        check_len("cholesky right-hand side", self.n, b.len())?;
        let n = self.n;
        let l = &self.lower;
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let s = row
                .iter()
                .zip(&b[..i])
                .fold(b[i], |acc, (&lv, &bv)| acc - lv * bv);
            b[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s = s - l[k * n + i] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
        Ok(())
    }
}

/// Dense `2AᵀA + diag(shift)`, accumulated row by row from the sparse blocks.
pub fn dense_normal_matrix<T: Scalar>(
    blocks: &ObservationBlocks<T>,
    shift: &[T],
) -> Result<Vec<T>> {
    let n = blocks.n_cols();
    check_len("normal matrix shift", n, shift.len())?;
    let mut m = vec![T::zero(); n * n];
    let mut row: Vec<(usize, T)> = Vec::new();
    let two = T::lit(2.0);
    for r in 0..blocks.n_rows() {
        row.clear();
        for j in 0..blocks.num_levels() {
            let offset = blocks.level_range(j).start;
            row.extend(blocks.block(j).row(r).map(|(c, v)| (c + offset, v)));
        }
        for &(c1, v1) in &row {
            let base = c1 * n;
            for &(c2, v2) in &row {
                m[base + c2] = m[base + c2] + two * v1 * v2;
            }
        }
    }
    for (i, &s) in shift.iter().enumerate() {
        m[i * n + i] = m[i * n + i] + s;
    }
    Ok(m)
}
