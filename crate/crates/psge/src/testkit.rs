//! Shared builders for unit tests: deterministic random matrices in the
//! shapes the solvers expect. Compiled only for `cfg(test)`.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::dense::DenseMatrix;
use crate::sparse::InteractionMatrix;
use crate::util::unit_f64;

pub(crate) fn sparse_from_dense(d: &DenseMatrix) -> InteractionMatrix {
    let mut row_ptr = vec![0usize];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            let v = d.get(i, j);
            if v != 0.0 {
                col_idx.push(j);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    InteractionMatrix::new(d.rows(), d.cols(), row_ptr, col_idx, values).unwrap()
}

/// Random sparse matrix with strictly positive stored values.
pub(crate) fn random_sparse(
    rows: usize,
    cols: usize,
    density: f64,
    seed: u64,
) -> InteractionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            if unit_f64(&mut rng) < density {
                d.set(i, j, 0.1 + unit_f64(&mut rng));
            }
        }
    }
    sparse_from_dense(&d)
}

/// Random binary (0/1-valued) interaction matrix in which every user and
/// every item is guaranteed at least one interaction.
pub(crate) fn random_binary(
    rows: usize,
    cols: usize,
    density: f64,
    seed: u64,
) -> InteractionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if unit_f64(&mut rng) < density {
                pairs.push((i, j));
            }
        }
        if pairs.last().map(|&(u, _)| u) != Some(i) {
            pairs.push((i, (unit_f64(&mut rng) * cols as f64) as usize % cols));
        }
    }
    let mut seen = vec![false; cols];
    for &(_, j) in &pairs {
        seen[j] = true;
    }
    for (j, s) in seen.into_iter().enumerate() {
        if !s {
            pairs.push(((unit_f64(&mut rng) * rows as f64) as usize % rows, j));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    InteractionMatrix::from_pairs(rows, cols, &pairs).unwrap()
}
