//! Small row-major dense matrix used for factor blocks and signals.
//!
//! This is deliberately minimal: the sparse side does the heavy lifting and
//! the dense blocks are tall-skinny factor matrices (`U x f`, `I x f`) or
//! desk-scale square matrices handed to the dense eigensolvers.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DenseError {
    #[error("dimension mismatch: left is {lr}x{lc}, right is {rr}x{rc}")]
    DimensionMismatch {
        lr: usize,
        lc: usize,
        rr: usize,
        rc: usize,
    },
    #[error("data length {len} does not match {rows}x{cols}")]
    BadLength { len: usize, rows: usize, cols: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from row-major data, rejecting length mismatches and non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, DenseError> {
        if data.len() != rows * cols {
            return Err(DenseError::BadLength {
                len: data.len(),
                rows,
                cols,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(DenseError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DenseError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(DenseError::BadLength {
                    len: row.len(),
                    rows: r,
                    cols: c,
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Keeps the first `k` columns, dropping the rest.
    pub fn truncate_cols(&self, k: usize) -> DenseMatrix {
        assert!(k <= self.cols, "cannot keep {k} of {} columns", self.cols);
        let mut out = DenseMatrix::zeros(self.rows, k);
        for r in 0..self.rows {
            out.data_mut()[r * k..(r + 1) * k].copy_from_slice(&self.row(r)[..k]);
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Plain triple-loop product; fine at the tall-skinny and desk scales used here.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, DenseError> {
        if self.cols != other.rows {
            return Err(DenseError::DimensionMismatch {
                lr: self.rows,
                lc: self.cols,
                rr: other.rows,
                rc: other.cols,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let lhs = self.row(r);
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &l) in lhs.iter().enumerate() {
                if l == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += l * s;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute deviation from `other`, entrywise.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Dot product of two equally sized slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
