//! Graph-convolution analysis lab.
//!
//! LightGCN-style propagation on the user-item bipartite graph is, in the
//! graph Fourier domain, multiplication by the low-order polynomial filter
//! `ĝ(λ) = (1/(k+1)) Σ_{i=0..k} λⁱ` — an increasing function on `[0, 1]`
//! that amplifies the top of the adjacency spectrum. This module runs the
//! propagation itself ([`propagate`]), evaluates the closed-form filter
//! ([`filter_response`]), applies it exactly through a dense
//! eigendecomposition ([`apply_spectral_filter`]), and measures how much
//! signal energy the convolution moves into the top eigenspace
//! ([`spectral_energy_profile`]).

use thiserror::Error;

use crate::dense::{DenseError, DenseMatrix};
use crate::sparse::{degrees, normalize_interactions, DegreeVectors, InteractionMatrix, SparseError};
use crate::spectral::{dense_symmetric_eig, SpectralError};

#[derive(Debug, Error)]
pub enum ConvError {
    #[error("signal has {got} rows, graph has {expected} nodes")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("filter response defined on [-1, 1], got lambda = {lambda}")]
    LambdaOutOfRange { lambda: f64 },
    #[error("layer weights must be nonempty and finite")]
    BadWeights,
    #[error("top_fraction must lie in [0, 1], got {got}")]
    BadFraction { got: f64 },
    #[error("signal is identically zero; energy fractions are undefined")]
    ZeroSignal,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// User-item interaction graph with its symmetrically normalised adjacency
/// `S = D^{-1/2} A D^{-1/2}` held in factored form: `S` is never densified,
/// applying it to a stacked signal `[p; q]` costs two sparse products
/// (`[R̂ q; R̂ᵀ p]` with `R̂ = D_U^{-1/2} R D_I^{-1/2}`).
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    r: InteractionMatrix,
    r_hat: InteractionMatrix,
    r_hat_t: InteractionMatrix,
    degrees: DegreeVectors,
}

impl BipartiteGraph {
    pub fn new(r: InteractionMatrix) -> Self {
        let r_hat = normalize_interactions(&r, 0.5, 0.5);
        let r_hat_t = r_hat.transposed();
        let degrees = degrees(&r);
        Self {
            r,
            r_hat,
            r_hat_t,
            degrees,
        }
    }

    pub fn n_users(&self) -> usize {
        self.r.n_users()
    }

    pub fn n_items(&self) -> usize {
        self.r.n_items()
    }

    /// Total node count (users + items) — the dimension of `S`.
    pub fn n_nodes(&self) -> usize {
        self.n_users() + self.n_items()
    }

    pub fn interactions(&self) -> &InteractionMatrix {
        &self.r
    }

    /// The symmetrically normalised interaction block `R̂`.
    pub fn normalized(&self) -> &InteractionMatrix {
        &self.r_hat
    }

    pub fn degrees(&self) -> &DegreeVectors {
        &self.degrees
    }

    /// One application of `S` to a stacked `(U+I) x f` signal block.
    pub fn apply_adjacency(&self, x: &DenseMatrix) -> Result<DenseMatrix, ConvError> {
        let (u, i) = (self.n_users(), self.n_items());
        if x.rows() != u + i {
            return Err(ConvError::DimensionMismatch {
                got: x.rows(),
                expected: u + i,
            });
        }
        let f = x.cols();
        let mut p_block = DenseMatrix::zeros(u, f);
        let mut q_block = DenseMatrix::zeros(i, f);
        p_block.data_mut().copy_from_slice(&x.data()[..u * f]);
        q_block.data_mut().copy_from_slice(&x.data()[u * f..]);
        let top = self.r_hat.spmm(&q_block, false)?;
        let bottom = self.r_hat_t.spmm(&p_block, false)?;
        let mut out = DenseMatrix::zeros(u + i, f);
        out.data_mut()[..u * f].copy_from_slice(top.data());
        out.data_mut()[u * f..].copy_from_slice(bottom.data());
        Ok(out)
    }

    /// Densifies `S` for the exact-eigendecomposition oracle path. Intended
    /// for lab-scale graphs; pair with the dense eigensolver's size guard.
    pub fn dense_adjacency(&self) -> DenseMatrix {
        let (u, n) = (self.n_users(), self.n_nodes());
        let mut s = DenseMatrix::zeros(n, n);
        for row in 0..u {
            let (cols, vals) = self.r_hat.row(row);
            for (&c, &v) in cols.iter().zip(vals) {
                s.set(row, u + c, v);
                s.set(u + c, row, v);
            }
        }
        s
    }
}

impl crate::models::SymmetricOperator for BipartiteGraph {
    fn dim(&self) -> usize {
        self.n_nodes()
    }

    fn apply_block(&self, x: &DenseMatrix) -> DenseMatrix {
        self.apply_adjacency(x).expect("dimension checked by caller")
    }
}

/// Per-layer combination weights `α₀..α_k`; the LightGCN default is
/// uniform `1/(k+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub alphas: Vec<f64>,
}

impl LayerWeights {
    pub fn new(alphas: Vec<f64>) -> Result<Self, ConvError> {
        if alphas.is_empty() || alphas.iter().any(|a| !a.is_finite()) {
            return Err(ConvError::BadWeights);
        }
        Ok(Self { alphas })
    }

    /// Uniform weights `α_i = 1/(k+1)` over `k` propagation steps.
    pub fn uniform(k: usize) -> Self {
        Self {
            alphas: vec![1.0 / (k + 1) as f64; k + 1],
        }
    }

    /// Number of propagation steps `k` (one less than the weight count).
    pub fn order(&self) -> usize {
        self.alphas.len() - 1
    }
}

/// Layer-combined propagation `X = Σ_i α_i Sⁱ X0`, computed by iterated
/// application of `S` — two sparse products per step, no densification.
pub fn propagate(
    g: &BipartiteGraph,
    x0: &DenseMatrix,
    weights: &LayerWeights,
) -> Result<DenseMatrix, ConvError> {
    if x0.rows() != g.n_nodes() {
        return Err(ConvError::DimensionMismatch {
            got: x0.rows(),
            expected: g.n_nodes(),
        });
    }
    let mut acc = DenseMatrix::zeros(x0.rows(), x0.cols());
    let mut cur = x0.clone();
    for (i, &alpha) in weights.alphas.iter().enumerate() {
        if i > 0 {
            cur = g.apply_adjacency(&cur)?;
        }
        if alpha != 0.0 {
            for (a, c) in acc.data_mut().iter_mut().zip(cur.data()) {
                *a += alpha * c;
            }
        }
    }
    Ok(acc)
}

/// The closed-form spectral response of uniform-weight propagation:
/// `ĝ(λ) = (1/(k+1)) · (1 - λ^{k+1}) / (1 - λ)` for `λ < 1` and exactly 1
/// at `λ = 1`. Near `λ = 1` (within 1e-6) the geometric-ratio form loses
/// digits to cancellation, so the polynomial sum is evaluated directly.
pub fn filter_response(lambda: f64, k: usize) -> Result<f64, ConvError> {
    if !(-1.0..=1.0).contains(&lambda) {
        return Err(ConvError::LambdaOutOfRange { lambda });
    }
    let kp1 = (k + 1) as f64;
    if lambda == 1.0 {
        return Ok(1.0);
    }
    if (1.0 - lambda).abs() < 1e-6 {
        // Horner evaluation of Σ_{i=0..k} λⁱ.
        let mut sum = 1.0;
        for _ in 0..k {
            sum = sum * lambda + 1.0;
        }
        return Ok(sum / kp1);
    }
    Ok((1.0 - lambda.powi(k as i32 + 1)) / ((1.0 - lambda) * kp1))
}

/// Exact Fourier-domain counterpart of uniform-weight [`propagate`]:
/// eigendecompose `S = U Λ Uᵀ` densely and return `U diag(ĝ(λ)) Uᵀ x`.
/// Guarded by the dense eigensolver's size limit.
pub fn apply_spectral_filter(
    g: &BipartiteGraph,
    x: &[f64],
    k: usize,
) -> Result<Vec<f64>, ConvError> {
    let n = g.n_nodes();
    if x.len() != n {
        return Err(ConvError::DimensionMismatch {
            got: x.len(),
            expected: n,
        });
    }
    let eig = dense_symmetric_eig(&g.dense_adjacency())?;
    let mut out = vec![0.0f64; n];
    for j in 0..n {
        // Clamp rounding spill: the true spectrum lies in [-1, 1].
        let lambda = eig.values[j].clamp(-1.0, 1.0);
        let gain = filter_response(lambda, k)?;
        if gain == 0.0 {
            continue;
        }
        let coeff: f64 = (0..n).map(|i| eig.vectors.get(i, j) * x[i]).sum();
        let scaled = gain * coeff;
        if scaled == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += scaled * eig.vectors.get(i, j);
        }
    }
    Ok(out)
}

/// Fraction of squared signal norm lying in the span of the eigenvectors
/// with the `top_fraction` largest eigenvalues, before and after
/// uniform-weight propagation with `k` steps. A zero post-propagation
/// signal reports an `after` fraction of 0.
pub fn spectral_energy_profile(
    g: &BipartiteGraph,
    x: &[f64],
    k: usize,
    top_fraction: f64,
) -> Result<(f64, f64), ConvError> {
    if !(0.0..=1.0).contains(&top_fraction) {
        return Err(ConvError::BadFraction { got: top_fraction });
    }
    let n = g.n_nodes();
    if x.len() != n {
        return Err(ConvError::DimensionMismatch {
            got: x.len(),
            expected: n,
        });
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(ConvError::ZeroSignal);
    }
    let eig = dense_symmetric_eig(&g.dense_adjacency())?;
    let n_top = (top_fraction * n as f64).ceil() as usize;

    let x0 = DenseMatrix::from_row_major(n, 1, x.to_vec())?;
    let propagated = propagate(g, &x0, &LayerWeights::uniform(k))?;

    let fraction_in_top = |signal: &[f64]| -> f64 {
        let mut top = 0.0f64;
        let mut total = 0.0f64;
        for j in 0..n {
            let coeff: f64 = (0..n).map(|i| eig.vectors.get(i, j) * signal[i]).sum();
            let e = coeff * coeff;
            total += e;
            if j < n_top {
                top += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            top / total
        }
    };

    let before = fraction_in_top(x);
    let after = fraction_in_top(propagated.data());
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::dot;
    use crate::testkit::random_binary;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    use crate::util::symmetric_f64;

    fn single_edge_graph() -> BipartiteGraph {
        BipartiteGraph::new(
            InteractionMatrix::new(1, 1, vec![0, 1], vec![0], vec![1.0]).unwrap(),
        )
    }

    #[test]
    fn propagate_identity_at_k_zero() {
        let g = BipartiteGraph::new(random_binary(6, 5, 0.4, 1));
        let x0 = DenseMatrix::from_row_major(11, 2, (0..22).map(|i| i as f64).collect()).unwrap();
        let out = propagate(&g, &x0, &LayerWeights::uniform(0)).unwrap();
        assert_eq!(out, x0);
    }

    #[test]
    fn propagate_single_edge_hand_computation() {
        // One user, one item, one interaction: S is the 2x2 exchange matrix,
        // so uniform k=1 propagation gives X = (X0 + S X0) / 2.
        let g = single_edge_graph();
        let x0 = DenseMatrix::from_row_major(2, 1, vec![3.0, 5.0]).unwrap();
        let out = propagate(&g, &x0, &LayerWeights::uniform(1)).unwrap();
        assert!((out.get(0, 0) - 4.0).abs() < 1e-12);
        assert!((out.get(1, 0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn top_eigenvector_is_propagation_fixed_point() {
        // sqrt-degree vector: S (D^{1/2} 1) = D^{1/2} 1, eigenvalue 1.
        let g = BipartiteGraph::new(random_binary(8, 6, 0.4, 3));
        let d = g.degrees().clone();
        let mut x: Vec<f64> = d
            .user_degrees
            .iter()
            .chain(d.item_degrees.iter())
            .map(|&v| v.sqrt())
            .collect();
        let norm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let x0 = DenseMatrix::from_row_major(14, 1, x.clone()).unwrap();
        for k in [1usize, 3, 7] {
            let out = propagate(&g, &x0, &LayerWeights::uniform(k)).unwrap();
            for i in 0..14 {
                assert!(
                    (out.get(i, 0) - x[i]).abs() < 1e-10,
                    "fixed point violated at node {i}, k={k}"
                );
            }
        }
    }

    #[test]
    fn propagate_rejects_wrong_height() {
        let g = single_edge_graph();
        let x0 = DenseMatrix::zeros(3, 1);
        assert!(matches!(
            propagate(&g, &x0, &LayerWeights::uniform(1)),
            Err(ConvError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn filter_response_known_values() {
        for k in 0..8 {
            assert_eq!(filter_response(1.0, k).unwrap(), 1.0);
            let at_zero = filter_response(0.0, k).unwrap();
            assert!((at_zero - 1.0 / (k + 1) as f64).abs() < 1e-15);
        }
        assert!((filter_response(0.5, 2).unwrap() - 1.75 / 3.0).abs() < 1e-12);
        // Odd k: (k+1) even, so the response vanishes at λ = -1.
        assert!(filter_response(-1.0, 3).unwrap().abs() < 1e-15);
        assert!(matches!(
            filter_response(1.5, 2),
            Err(ConvError::LambdaOutOfRange { .. })
        ));
        assert!(matches!(
            filter_response(-1.0000001, 2),
            Err(ConvError::LambdaOutOfRange { .. })
        ));
    }

    #[test]
    fn filter_matches_polynomial_sum_everywhere() {
        for k in 0..=10usize {
            for step in 0..=400 {
                let lambda = -1.0 + 2.0 * step as f64 / 400.0;
                let direct: f64 = (0..=k).map(|i| lambda.powi(i as i32)).sum::<f64>()
                    / (k + 1) as f64;
                let got = filter_response(lambda, k).unwrap();
                assert!(
                    (got - direct).abs() < 1e-12,
                    "k={k}, lambda={lambda}: {got} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn filter_monotone_and_bounded_on_unit_interval() {
        for k in 0..=10usize {
            let mut prev = -1.0f64;
            for step in 0..=1000 {
                let lambda = step as f64 / 1000.0;
                let g = filter_response(lambda, k).unwrap();
                assert!((0.0..=1.0 + 1e-15).contains(&g));
                assert!(g + 1e-15 >= prev, "not monotone at k={k}, λ={lambda}");
                prev = g;
            }
        }
        // |ĝ| ≤ 1 on the negative half too.
        for k in 0..=10usize {
            for step in 0..=1000 {
                let lambda = -1.0 + step as f64 / 1000.0;
                assert!(filter_response(lambda, k).unwrap().abs() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn spectral_filter_equals_propagation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..5u64 {
            let g = BipartiteGraph::new(random_binary(15 + seed as usize, 12, 0.3, seed));
            let n = g.n_nodes();
            let x: Vec<f64> = (0..n).map(|_| symmetric_f64(&mut rng)).collect();
            for k in [1usize, 2, 4, 8] {
                let via_filter = apply_spectral_filter(&g, &x, k).unwrap();
                let x0 = DenseMatrix::from_row_major(n, 1, x.clone()).unwrap();
                let via_prop = propagate(&g, &x0, &LayerWeights::uniform(k)).unwrap();
                for i in 0..n {
                    assert!(
                        (via_filter[i] - via_prop.get(i, 0)).abs() < 1e-8,
                        "mismatch at node {i}, k={k}, seed={seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn lambda_one_eigenvector_unchanged_by_filter() {
        let g = BipartiteGraph::new(random_binary(10, 8, 0.35, 7));
        let d = g.degrees().clone();
        let mut x: Vec<f64> = d
            .user_degrees
            .iter()
            .chain(d.item_degrees.iter())
            .map(|&v| v.sqrt())
            .collect();
        let norm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let out = apply_spectral_filter(&g, &x, 4).unwrap();
        for i in 0..x.len() {
            assert!((out[i] - x[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn minus_one_eigenvector_killed_at_odd_k() {
        // Single edge: spectrum is {+1, -1}; the λ=-1 eigenvector is
        // (1, -1)/√2 and ĝ(-1) = 0 for odd k.
        let g = single_edge_graph();
        let s = 1.0 / 2.0f64.sqrt();
        let x = vec![s, -s];
        let out = apply_spectral_filter(&g, &x, 3).unwrap();
        assert!(out[0].abs() < 1e-12);
        assert!(out[1].abs() < 1e-12);
    }

    #[test]
    fn adjacency_spectrum_within_unit_interval() {
        for seed in 0..4u64 {
            let g = BipartiteGraph::new(random_binary(12, 9, 0.3, 40 + seed));
            let eig = dense_symmetric_eig(&g.dense_adjacency()).unwrap();
            for &v in &eig.values {
                assert!((-1.0 - 1e-10..=1.0 + 1e-10).contains(&v), "eigenvalue {v}");
            }
            assert!((eig.values[0] - 1.0).abs() < 1e-10, "top eigenvalue is 1");
        }
    }

    #[test]
    fn energy_profile_extremes() {
        let g = BipartiteGraph::new(random_binary(10, 8, 0.35, 11));
        let n = g.n_nodes();
        let eig = dense_symmetric_eig(&g.dense_adjacency()).unwrap();
        let n_top = (0.25 * n as f64).ceil() as usize;
        // Signal already in the top span.
        let top_vec: Vec<f64> = (0..n).map(|i| eig.vectors.get(i, 0)).collect();
        let (before, after) = spectral_energy_profile(&g, &top_vec, 4, 0.25).unwrap();
        assert!((before - 1.0).abs() < 1e-10);
        assert!((after - 1.0).abs() < 1e-10);
        // Signal orthogonal to the top span: take the smallest eigenvector.
        let bottom_vec: Vec<f64> = (0..n).map(|i| eig.vectors.get(i, n - 1)).collect();
        let (before, _) = spectral_energy_profile(&g, &bottom_vec, 4, 0.25).unwrap();
        assert!(before < 1e-10, "n_top={n_top}, before={before}");
    }

    #[test]
    fn propagation_concentrates_energy_in_top_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = BipartiteGraph::new(random_binary(60, 40, 0.1, 17));
        let n = g.n_nodes();
        let x: Vec<f64> = (0..n).map(|_| symmetric_f64(&mut rng)).collect();
        let (before, after) = spectral_energy_profile(&g, &x, 4, 0.1).unwrap();
        assert!(
            after >= before,
            "high-pass property violated: before={before}, after={after}"
        );
    }

    #[test]
    fn energy_profile_rejects_zero_signal() {
        let g = single_edge_graph();
        assert!(matches!(
            spectral_energy_profile(&g, &[0.0, 0.0], 2, 0.5),
            Err(ConvError::ZeroSignal)
        ));
    }
}
