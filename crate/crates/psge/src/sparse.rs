//! Compressed-row storage for the user-item interaction matrix, plus the
//! sparse-dense products, degree sums and propensity normalisation every
//! model is built on.
//!
//! All types are immutable after construction. `spmm` parallelises over
//! output rows (each row accumulated serially in column order), so results
//! are bit-identical regardless of thread count.

use log::warn;
use thiserror::Error;

use crate::dense::DenseMatrix;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error, PartialEq)]
pub enum SparseError {
    #[error("row_ptr has length {got}, expected {expected}")]
    BadRowPtr { got: usize, expected: usize },
    #[error("row_ptr is not nondecreasing at row {row}")]
    RowPtrNotSorted { row: usize },
    #[error("row_ptr end {end} does not match nnz {nnz}")]
    RowPtrEnd { end: usize, nnz: usize },
    #[error("col_idx/values length mismatch: {cols} vs {values}")]
    LengthMismatch { cols: usize, values: usize },
    #[error("column index {col} out of bounds for {n_items} items (row {row})")]
    ColumnOutOfBounds { col: usize, n_items: usize, row: usize },
    #[error("column indices not strictly increasing within row {row}")]
    UnsortedRow { row: usize },
    #[error("nonpositive or non-finite value at row {row}")]
    BadValue { row: usize },
    #[error("dimension mismatch: matrix is {rows}x{cols}, operand has {got} rows")]
    DimensionMismatch { rows: usize, cols: usize, got: usize },
}

/// Sparse nonnegative matrix in compressed-row form. Implicit-feedback
/// datasets store the value 1.0 per retained interaction; normalised
/// variants carry the reweighted entries.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    n_users: usize,
    n_items: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Row and column sums of an [`InteractionMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVectors {
    pub user_degrees: Vec<f64>,
    pub item_degrees: Vec<f64>,
}

impl InteractionMatrix {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn new(
        n_users: usize,
        n_items: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        if row_ptr.len() != n_users + 1 {
            return Err(SparseError::BadRowPtr {
                got: row_ptr.len(),
                expected: n_users + 1,
            });
        }
        if col_idx.len() != values.len() {
            return Err(SparseError::LengthMismatch {
                cols: col_idx.len(),
                values: values.len(),
            });
        }
        if row_ptr[n_users] != col_idx.len() {
            return Err(SparseError::RowPtrEnd {
                end: row_ptr[n_users],
                nnz: col_idx.len(),
            });
        }
        for u in 0..n_users {
            let (lo, hi) = (row_ptr[u], row_ptr[u + 1]);
            if lo > hi {
                return Err(SparseError::RowPtrNotSorted { row: u });
            }
            let mut prev = None;
            for k in lo..hi {
                let c = col_idx[k];
                if c >= n_items {
                    return Err(SparseError::ColumnOutOfBounds {
                        col: c,
                        n_items,
                        row: u,
                    });
                }
                if prev.is_some_and(|p| c <= p) {
                    return Err(SparseError::UnsortedRow { row: u });
                }
                prev = Some(c);
                if !(values[k] > 0.0 && values[k].is_finite()) {
                    return Err(SparseError::BadValue { row: u });
                }
            }
        }
        Ok(Self {
            n_users,
            n_items,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds from (user, item) pairs with unit weight, deduplicating nothing:
    /// the caller guarantees unique pairs.
    pub fn from_pairs(
        n_users: usize,
        n_items: usize,
        pairs: &[(usize, usize)],
    ) -> Result<Self, SparseError> {
        let mut sorted: Vec<(usize, usize)> = pairs.to_vec();
        sorted.sort_unstable();
        let mut row_ptr = vec![0usize; n_users + 1];
        for &(u, _) in &sorted {
            if u >= n_users {
                return Err(SparseError::BadRowPtr {
                    got: u,
                    expected: n_users,
                });
            }
            row_ptr[u + 1] += 1;
        }
        for u in 0..n_users {
            row_ptr[u + 1] += row_ptr[u];
        }
        let col_idx: Vec<usize> = sorted.iter().map(|&(_, i)| i).collect();
        let values = vec![1.0; col_idx.len()];
        Self::new(n_users, n_items, row_ptr, col_idx, values)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `u`.
    pub fn row(&self, u: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[u], self.row_ptr[u + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Column-access view: the transpose as its own compressed-row matrix.
    /// Materialise once when a loop needs repeated transposed products.
    pub fn transposed(&self) -> InteractionMatrix {
        let mut counts = vec![0usize; self.n_items + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_items {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut cursor = counts;
        let nnz = self.nnz();
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        for u in 0..self.n_users {
            for k in self.row_ptr[u]..self.row_ptr[u + 1] {
                let c = self.col_idx[k];
                let dst = cursor[c];
                col_idx[dst] = u;
                values[dst] = self.values[k];
                cursor[c] += 1;
            }
        }
        InteractionMatrix {
            n_users: self.n_items,
            n_items: self.n_users,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Densifies; intended for toy-scale oracles and diagnostics.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_users, self.n_items);
        for u in 0..self.n_users {
            let (cols, vals) = self.row(u);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(u, c, v);
            }
        }
        out
    }

    /// Sparse-dense product `R * X` (or `R^T * X` with `transpose`).
    ///
    /// The plain product runs row-parallel; the transposed product is a
    /// single serial scatter pass so each output row still accumulates in
    /// ascending-row order. Hot loops should materialise [`Self::transposed`]
    /// once instead of passing `transpose = true` repeatedly.
    pub fn spmm(&self, x: &DenseMatrix, transpose: bool) -> Result<DenseMatrix, SparseError> {
        if transpose {
            if x.rows() != self.n_users {
                return Err(SparseError::DimensionMismatch {
                    rows: self.n_users,
                    cols: self.n_items,
                    got: x.rows(),
                });
            }
            let f = x.cols();
            let mut out = DenseMatrix::zeros(self.n_items, f);
            for u in 0..self.n_users {
                let src = x.row(u);
                let (cols, vals) = self.row(u);
                for (&c, &v) in cols.iter().zip(vals) {
                    let dst = &mut out.data_mut()[c * f..(c + 1) * f];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += v * s;
                    }
                }
            }
            Ok(out)
        } else {
            if x.rows() != self.n_items {
                return Err(SparseError::DimensionMismatch {
                    rows: self.n_users,
                    cols: self.n_items,
                    got: x.rows(),
                });
            }
            let f = x.cols();
            let mut out = DenseMatrix::zeros(self.n_users, f);
            let fill = |(u, dst): (usize, &mut [f64])| {
                let (cols, vals) = self.row(u);
                for (&c, &v) in cols.iter().zip(vals) {
                    let src = x.row(c);
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += v * s;
                    }
                }
            };
            #[cfg(feature = "parallel")]
            out.data_mut().par_chunks_mut(f.max(1)).enumerate().for_each(fill);
            #[cfg(not(feature = "parallel"))]
            out.data_mut().chunks_mut(f.max(1)).enumerate().for_each(fill);
            Ok(out)
        }
    }

    /// Sequential twin of [`Self::spmm`] (no transpose). Kept public as the
    /// reference kernel and for the benchmark comparison against the
    /// parallel path.
    pub fn spmm_seq(&self, x: &DenseMatrix) -> Result<DenseMatrix, SparseError> {
        if x.rows() != self.n_items {
            return Err(SparseError::DimensionMismatch {
                rows: self.n_users,
                cols: self.n_items,
                got: x.rows(),
            });
        }
        let f = x.cols();
        let mut out = DenseMatrix::zeros(self.n_users, f);
        for (u, dst) in out.data_mut().chunks_mut(f.max(1)).enumerate() {
            let (cols, vals) = self.row(u);
            for (&c, &v) in cols.iter().zip(vals) {
                let src = x.row(c);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        Ok(out)
    }

    /// Sparse-vector product `R * v` into a caller-provided buffer.
    pub fn spmv_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.n_items);
        assert_eq!(out.len(), self.n_users);
        let fill = |(u, dst): (usize, &mut f64)| {
            let (cols, vals) = self.row(u);
            *dst = cols.iter().zip(vals).map(|(&c, &w)| w * v[c]).sum();
        };
        #[cfg(feature = "parallel")]
        out.par_iter_mut().enumerate().for_each(fill);
        #[cfg(not(feature = "parallel"))]
        out.iter_mut().enumerate().for_each(fill);
    }
}

/// Row and column weight sums.
pub fn degrees(r: &InteractionMatrix) -> DegreeVectors {
    let mut user_degrees = vec![0.0; r.n_users()];
    let mut item_degrees = vec![0.0; r.n_items()];
    for u in 0..r.n_users() {
        let (cols, vals) = r.row(u);
        let mut acc = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            acc += v;
            item_degrees[c] += v;
        }
        user_degrees[u] = acc;
    }
    DegreeVectors {
        user_degrees,
        item_degrees,
    }
}

/// Inverse-propensity reweighting `r~_ui = r_ui * d_u^-alpha * d_i^-beta`,
/// with zero-degree rows and columns mapping to zero (the 0^-x * 0 := 0
/// convention). The sparsity pattern is preserved exactly.
pub fn normalize_interactions(
    r: &InteractionMatrix,
    alpha: f64,
    beta: f64,
) -> InteractionMatrix {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        warn!("normalisation exponents outside [0, 1]: alpha={alpha}, beta={beta}");
    }
    let deg = degrees(r);
    let user_scale: Vec<f64> = deg
        .user_degrees
        .iter()
        .map(|&d| if d > 0.0 { d.powf(-alpha) } else { 0.0 })
        .collect();
    let item_scale: Vec<f64> = deg
        .item_degrees
        .iter()
        .map(|&d| if d > 0.0 { d.powf(-beta) } else { 0.0 })
        .collect();
    let mut values = r.values().to_vec();
    for u in 0..r.n_users() {
        let (lo, hi) = (r.row_ptr()[u], r.row_ptr()[u + 1]);
        for k in lo..hi {
            values[k] *= user_scale[u] * item_scale[r.col_idx()[k]];
        }
    }
    InteractionMatrix {
        n_users: r.n_users(),
        n_items: r.n_items(),
        row_ptr: r.row_ptr().to_vec(),
        col_idx: r.col_idx().to_vec(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> InteractionMatrix {
        // [[1, 1], [0, 1]]
        InteractionMatrix::new(2, 2, vec![0, 2, 3], vec![0, 1, 1], vec![1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn degrees_direct_sums() {
        let d = degrees(&toy());
        assert_eq!(d.user_degrees, vec![2.0, 1.0]);
        assert_eq!(d.item_degrees, vec![1.0, 2.0]);
    }

    #[test]
    fn degrees_empty_row_is_zero() {
        let r = InteractionMatrix::new(2, 2, vec![0, 0, 1], vec![0], vec![1.0]).unwrap();
        assert_eq!(degrees(&r).user_degrees[0], 0.0);
    }

    #[test]
    fn degree_totals_match() {
        let d = degrees(&toy());
        let u: f64 = d.user_degrees.iter().sum();
        let i: f64 = d.item_degrees.iter().sum();
        assert_eq!(u, i);
        assert_eq!(u, 3.0);
    }

    #[test]
    fn normalize_zero_exponents_is_identity() {
        let r = toy();
        assert_eq!(normalize_interactions(&r, 0.0, 0.0), r);
    }

    #[test]
    fn normalize_matches_hand_computation() {
        // degrees: d_u = [2, 1], d_i = [1, 2]
        let n = normalize_interactions(&toy(), 0.5, 0.5);
        let expect = [
            1.0 / (2.0_f64.sqrt() * 1.0_f64.sqrt()),
            1.0 / (2.0_f64.sqrt() * 2.0_f64.sqrt()),
            1.0 / (1.0_f64.sqrt() * 2.0_f64.sqrt()),
        ];
        for (got, want) in n.values().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // symmetric normalisation weight 1/(d_u^1/2 d_i^1/2)
        assert!((n.values()[0] - 0.70711).abs() < 1e-5);
        assert!((n.values()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalize_preserves_pattern() {
        let r = toy();
        let n = normalize_interactions(&r, 0.7, 0.3);
        assert_eq!(n.row_ptr(), r.row_ptr());
        assert_eq!(n.col_idx(), r.col_idx());
    }

    #[test]
    fn spmm_identity_pattern_returns_input() {
        let eye =
            InteractionMatrix::new(3, 3, vec![0, 1, 2, 3], vec![0, 1, 2], vec![1.0; 3]).unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let y = eye.spmm(&x, false).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn spmm_zero_row_gives_zero_output_row() {
        let r = InteractionMatrix::new(2, 2, vec![0, 0, 2], vec![0, 1], vec![1.0, 2.0]).unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let y = r.spmm(&x, false).unwrap();
        assert_eq!(y.row(0), &[0.0]);
        assert_eq!(y.row(1), &[3.0]);
    }

    #[test]
    fn spmm_dimension_mismatch_rejected() {
        let r = toy();
        let x = DenseMatrix::zeros(3, 1);
        assert!(r.spmm(&x, false).is_err());
        assert!(r.spmm(&x, true).is_err());
    }

    #[test]
    fn transposed_matches_dense_transpose() {
        let r = InteractionMatrix::new(
            3,
            4,
            vec![0, 2, 3, 5],
            vec![0, 2, 1, 0, 3],
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
        )
        .unwrap();
        let t = r.transposed();
        assert_eq!(t.to_dense(), r.to_dense().transpose());
    }

    #[test]
    fn new_rejects_unsorted_row() {
        let err = InteractionMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).unwrap_err();
        assert_eq!(err, SparseError::UnsortedRow { row: 0 });
    }

    #[test]
    fn new_rejects_nonpositive_values() {
        let err = InteractionMatrix::new(1, 2, vec![0, 1], vec![0], vec![0.0]).unwrap_err();
        assert_eq!(err, SparseError::BadValue { row: 0 });
    }
}
