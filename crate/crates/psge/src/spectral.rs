//! Truncated spectral factorisation of sparse interaction matrices.
//!
//! The workhorse is [`truncated_svd`]: symmetric Lanczos with full
//! reorthogonalisation and thick restarts, run on the Gram operator of the
//! smaller side (`R~ᵀ R~` or `R~ R~ᵀ`), so the top-f singular triplets come
//! out of sparse matrix-vector products alone — no gradient descent, no
//! densification. Dense eigensolver/SVD oracles back the test suite and the
//! graph-convolution lab, and [`adjacency_eigs_from_svd`] lifts singular
//! triplets of `R~` to eigenpairs of the bipartite adjacency
//! `[[0, R~], [R~ᵀ, 0]]`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use thiserror::Error;

use crate::dense::{dot, DenseError, DenseMatrix};
use crate::sparse::InteractionMatrix;
use crate::util::symmetric_f64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Largest dense side accepted by [`dense_svd_oracle`].
pub const DENSE_SVD_GUARD: usize = 500;
/// Largest dimension accepted by [`dense_symmetric_eig`].
pub const DENSE_EIG_GUARD: usize = 2000;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("requested rank {f} outside [1, {max}]")]
    RankOutOfRange { f: usize, max: usize },
    #[error("tolerance must be positive, got {tol}")]
    BadTolerance { tol: f64 },
    #[error("matrix side {n} exceeds dense-solver guard {max}")]
    SizeGuard { n: usize, max: usize },
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_diff:e}")]
    NotSymmetric { max_diff: f64 },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// Top-f singular triplets of a (normalised) interaction matrix:
/// `R~ ≈ p_tilde · diag(sigma) · q_tildeᵀ`.
///
/// Columns of `p_tilde`/`q_tilde` with `sigma[j] > 0` are orthonormal; when
/// f exceeds the numerical rank the trailing `sigma` entries are exactly 0
/// and the corresponding derived-side columns are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactors {
    /// Left singular vectors, `n_users x f`.
    pub p_tilde: DenseMatrix,
    /// Singular values, descending, all `>= 0`.
    pub sigma: Vec<f64>,
    /// Right singular vectors, `n_items x f`.
    pub q_tilde: DenseMatrix,
}

impl SpectralFactors {
    pub fn n_users(&self) -> usize {
        self.p_tilde.rows()
    }

    pub fn n_items(&self) -> usize {
        self.q_tilde.rows()
    }

    /// Number of retained factors (including trailing zero-σ columns).
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Keeps only the leading `f` factors; panics if `f` exceeds the rank.
    pub fn truncate(&self, f: usize) -> SpectralFactors {
        assert!(f <= self.rank(), "cannot truncate {} factors to {f}", self.rank());
        SpectralFactors {
            p_tilde: self.p_tilde.truncate_cols(f),
            sigma: self.sigma[..f].to_vec(),
            q_tilde: self.q_tilde.truncate_cols(f),
        }
    }
}

/// Eigenpairs of a symmetric operator, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigResult {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, `n x f`.
    pub vectors: DenseMatrix,
}

/// What the iterative solver did and how well it converged.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// True when every requested Ritz pair met the residual tolerance.
    pub converged: bool,
    /// Number of Gram-operator applications.
    pub matvecs: usize,
    /// Number of thick restarts performed.
    pub restarts: usize,
    /// Residual-norm estimates for the top-f Ritz pairs of the Gram
    /// operator (scale of σ², not σ).
    pub residuals: Vec<f64>,
    /// Largest entry of `residuals`.
    pub max_residual: f64,
}

/// Factors plus the convergence report. Non-convergence is reported, not
/// raised: callers get the best factors found and decide what to do.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdOutcome {
    pub factors: SpectralFactors,
    pub report: ConvergenceReport,
}

// ---------------------------------------------------------------------------
// Gram operator
// ---------------------------------------------------------------------------

/// `v ↦ R~ᵀ(R~ v)` (or the transposed pairing), applied on whichever side is
/// smaller so the Krylov basis lives in the lower-dimensional space.
struct GramOp<'a> {
    r: &'a InteractionMatrix,
    rt: InteractionMatrix,
    items_side: bool,
}

impl<'a> GramOp<'a> {
    fn new(r: &'a InteractionMatrix) -> Self {
        Self {
            r,
            rt: r.transposed(),
            items_side: r.n_items() <= r.n_users(),
        }
    }

    fn dim(&self) -> usize {
        if self.items_side {
            self.r.n_items()
        } else {
            self.r.n_users()
        }
    }

    fn co_dim(&self) -> usize {
        if self.items_side {
            self.r.n_users()
        } else {
            self.r.n_items()
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        if self.items_side {
            self.r.spmv_into(v, scratch);
            self.rt.spmv_into(scratch, out);
        } else {
            self.rt.spmv_into(v, scratch);
            self.r.spmv_into(scratch, out);
        }
    }

    /// Maps a Ritz vector to the other side: `R~ v` or `R~ᵀ v`.
    fn cross_apply(&self, v: &[f64], out: &mut [f64]) {
        if self.items_side {
            self.r.spmv_into(v, out);
        } else {
            self.rt.spmv_into(v, out);
        }
    }
}

// ---------------------------------------------------------------------------
// Orthonormal-basis kernels
// ---------------------------------------------------------------------------

fn vec_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `t[j] = <basis_j, w>` for the `m` stored basis vectors. Each dot product
/// is a serial left-to-right sum, so the result is thread-count independent.
fn basis_coeffs(basis: &[f64], n: usize, m: usize, w: &[f64]) -> Vec<f64> {
    let one = |j: usize| dot(&basis[j * n..(j + 1) * n], w);
    #[cfg(feature = "parallel")]
    {
        (0..m).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..m).map(one).collect()
    }
}

/// `w -= Σ_j t[j] · basis_j`, accumulated per element in ascending j so the
/// result does not depend on how the index range is chunked across threads.
fn basis_subtract(basis: &[f64], n: usize, m: usize, t: &[f64], w: &mut [f64]) {
    let chunk = 4096;
    let body = |(ci, wc): (usize, &mut [f64])| {
        let offset = ci * chunk;
        for (j, &tj) in t.iter().enumerate().take(m) {
            if tj == 0.0 {
                continue;
            }
            let b = &basis[j * n + offset..j * n + offset + wc.len()];
            for (wi, bi) in wc.iter_mut().zip(b) {
                *wi -= tj * bi;
            }
        }
    };
    #[cfg(feature = "parallel")]
    w.par_chunks_mut(chunk).enumerate().for_each(body);
    #[cfg(not(feature = "parallel"))]
    w.chunks_mut(chunk).enumerate().for_each(body);
}

/// Two-pass classical Gram-Schmidt of `w` against the basis; returns the
/// exact projection coefficients of the *original* `w` (the entries of the
/// projected-operator column when `w = B v_last`).
fn orthogonalize_twice(basis: &[f64], n: usize, m: usize, w: &mut [f64]) -> Vec<f64> {
    let mut t = basis_coeffs(basis, n, m, w);
    basis_subtract(basis, n, m, &t, w);
    let t2 = basis_coeffs(basis, n, m, w);
    basis_subtract(basis, n, m, &t2, w);
    for (a, b) in t.iter_mut().zip(&t2) {
        *a += b;
    }
    t
}

// ---------------------------------------------------------------------------
// Small dense symmetric eigensolve (projected problems + public oracle)
// ---------------------------------------------------------------------------

/// Symmetric eigensolve of the leading `m x m` block of `t` (row stride
/// `stride`), eigenvalues descending. Vectors returned column-wise.
fn sym_eig_desc(t: &[f64], stride: usize, m: usize) -> (Vec<f64>, DenseMatrix) {
    let a = DMatrix::from_fn(m, m, |i, j| t[i * stride + j]);
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = DenseMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..m {
            vectors.set(i, dst, eig.eigenvectors[(i, src)]);
        }
    }
    (values, vectors)
}

/// Flips column signs so each column of `q` has its largest-magnitude entry
/// positive (first index wins ties); `p` columns are flipped in lockstep so
/// the product `p diag(σ) qᵀ` is unchanged. All-zero columns are left alone.
fn sign_fix_columns(q: &mut DenseMatrix, mut p: Option<&mut DenseMatrix>) {
    for j in 0..q.cols() {
        let mut pivot = 0usize;
        let mut best = 0.0f64;
        for i in 0..q.rows() {
            let a = q.get(i, j).abs();
            if a > best {
                best = a;
                pivot = i;
            }
        }
        if best == 0.0 || q.get(pivot, j) >= 0.0 {
            continue;
        }
        for i in 0..q.rows() {
            let v = q.get(i, j);
            q.set(i, j, -v);
        }
        if let Some(pm) = p.as_deref_mut() {
            for i in 0..pm.rows() {
                let v = pm.get(i, j);
                pm.set(i, j, -v);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Public oracles
// ---------------------------------------------------------------------------

/// Full SVD of a small dense matrix, descending σ, same sign convention as
/// [`truncated_svd`]. This is the reference the iterative solver is tested
/// against; guarded to `min(rows, cols) <=` [`DENSE_SVD_GUARD`].
pub fn dense_svd_oracle(m: &DenseMatrix) -> Result<SpectralFactors, SpectralError> {
    let f = m.rows().min(m.cols());
    if f > DENSE_SVD_GUARD {
        return Err(SpectralError::SizeGuard {
            n: f,
            max: DENSE_SVD_GUARD,
        });
    }
    let a = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    let svd = a.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    // nalgebra sorts descending; re-sort defensively so the contract never
    // silently depends on upstream behaviour.
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });
    let sigma: Vec<f64> = order.iter().map(|&j| svd.singular_values[j]).collect();
    let mut p_tilde = DenseMatrix::zeros(m.rows(), f);
    let mut q_tilde = DenseMatrix::zeros(m.cols(), f);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..m.rows() {
            p_tilde.set(i, dst, u[(i, src)]);
        }
        for i in 0..m.cols() {
            q_tilde.set(i, dst, v_t[(src, i)]);
        }
    }
    sign_fix_columns(&mut q_tilde, Some(&mut p_tilde));
    Ok(SpectralFactors {
        p_tilde,
        sigma,
        q_tilde,
    })
}

/// Full spectrum of a dense symmetric matrix, eigenvalues descending,
/// orthonormal eigenvectors as columns. Rejects matrices that are
/// asymmetric beyond 1e-10 or larger than [`DENSE_EIG_GUARD`].
pub fn dense_symmetric_eig(a: &DenseMatrix) -> Result<EigResult, SpectralError> {
    if a.rows() != a.cols() {
        return Err(SpectralError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > DENSE_EIG_GUARD {
        return Err(SpectralError::SizeGuard {
            n,
            max: DENSE_EIG_GUARD,
        });
    }
    let mut max_diff = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_diff = max_diff.max((a.get(i, j) - a.get(j, i)).abs());
        }
    }
    if max_diff > 1e-10 {
        return Err(SpectralError::NotSymmetric { max_diff });
    }
    let (values, mut vectors) = sym_eig_desc(a.data(), n, n);
    sign_fix_columns(&mut vectors, None);
    Ok(EigResult { values, vectors })
}

/// Lifts singular triplets of `R~` to eigenpairs of the bipartite adjacency
/// `A~ = [[0, R~], [R~ᵀ, 0]]`: the vector `(1/√2)[p~_j; q~_j]` (users
/// stacked above items) is an eigenvector with eigenvalue `+σ_j`.
///
/// The mirrored family `(1/√2)[p~_j; -q~_j]` with eigenvalue `-σ_j` exists
/// by the same algebra and is deliberately not materialised: the models only
/// consume the top of the spectrum.
pub fn adjacency_eigs_from_svd(factors: &SpectralFactors) -> EigResult {
    let (u, i, f) = (factors.n_users(), factors.n_items(), factors.rank());
    let scale = 1.0 / 2.0f64.sqrt();
    let mut vectors = DenseMatrix::zeros(u + i, f);
    for j in 0..f {
        for r in 0..u {
            vectors.set(r, j, scale * factors.p_tilde.get(r, j));
        }
        for r in 0..i {
            vectors.set(u + r, j, scale * factors.q_tilde.get(r, j));
        }
    }
    EigResult {
        values: factors.sigma.clone(),
        vectors,
    }
}

/// Cosines of the principal angles between the column spans of `a` and `b`
/// (columns assumed orthonormal): the singular values of `aᵀ b`, descending.
pub fn principal_angle_cosines(
    a: &DenseMatrix,
    b: &DenseMatrix,
) -> Result<Vec<f64>, SpectralError> {
    let prod = a.transpose().matmul(b)?;
    Ok(dense_svd_oracle(&prod)?.sigma)
}

/// Max absolute deviation of `mᵀm` from the identity — 0 for a perfectly
/// orthonormal column block.
pub fn orthonormality_defect(m: &DenseMatrix) -> f64 {
    let gram = m.transpose().matmul(m).expect("shapes agree by construction");
    let mut worst = 0.0f64;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram.get(i, j) - target).abs());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Thick-restart Lanczos
// ---------------------------------------------------------------------------

/// Relative breakdown threshold: the orthogonalised remainder is considered
/// zero when its norm falls below this fraction of the pre-orthogonalisation
/// norm (an invariant subspace has been found).
const BREAKDOWN_REL: f64 = 1e-12;
/// Random re-seeds attempted when the Krylov recurrence breaks down before
/// the basis is full.
const MAX_INJECTIONS: usize = 50;

/// Top-f singular triplets of `r_tilde` by symmetric Lanczos on the Gram
/// operator of the smaller side, with full (two-pass) reorthogonalisation
/// and thick restarts.
///
/// * `tol` bounds the Ritz residuals of the Gram operator relative to its
///   largest Ritz value (σ² scale).
/// * `max_iter` caps the number of operator applications; when it is
///   exhausted the best factors found are returned with
///   `report.converged = false` rather than an error.
/// * `seed` fixes the start vector; identical inputs and seed give
///   bit-identical factors regardless of thread count (all reductions run
///   in a fixed serial order).
///
/// Singular values below `σ_max · 1e-12` are reported as exactly 0 with a
/// zero derived-side column, which is how a request for `f` beyond the
/// numerical rank comes back.
pub fn truncated_svd(
    r_tilde: &InteractionMatrix,
    f: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SvdOutcome, SpectralError> {
    let max_rank = r_tilde.n_users().min(r_tilde.n_items());
    if f == 0 || f > max_rank {
        return Err(SpectralError::RankOutOfRange { f, max: max_rank });
    }
    if !(tol > 0.0) {
        return Err(SpectralError::BadTolerance { tol });
    }

    let op = GramOp::new(r_tilde);
    let n = op.dim();
    let extra = f.clamp(20, 500);
    let m_max = n.min(f + extra);
    let keep = (f + extra / 2).min(m_max.saturating_sub(1)).max(f.min(m_max - 1));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_unit = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| symmetric_f64(rng)).collect();
            let nv = vec_norm(&v);
            if nv > 1e-3 {
                return v.iter().map(|x| x / nv).collect();
            }
        }
    };

    // Basis vectors live contiguously in `basis`; `t_mat` is the projected
    // operator Vᵀ B V (row stride m_max), filled column-exactly as each
    // basis vector is processed.
    let mut basis: Vec<f64> = Vec::with_capacity(m_max * n);
    let mut t_mat = vec![0.0f64; m_max * m_max];
    let mut m = 0usize;
    // Next vector to append, plus its coupling norm to the current basis
    // (the β of the step that produced it; 0 for injected vectors).
    let mut candidate: Option<(Vec<f64>, f64)> = Some((random_unit(&mut rng), 0.0));

    let mut scratch = vec![0.0f64; op.co_dim()];
    let mut matvecs = 0usize;
    let mut restarts = 0usize;
    let mut injections = 0usize;

    let (theta, s_vecs, report) = loop {
        // Grow the basis.
        while m < m_max {
            let (v, _beta_in) = match candidate.take() {
                Some(c) => c,
                None => {
                    // Breakdown: the subspace is invariant. Restart the
                    // recurrence from a fresh random direction so eigenpairs
                    // outside the subspace can still be found.
                    if m >= n || injections >= MAX_INJECTIONS {
                        break;
                    }
                    injections += 1;
                    let mut v = random_unit(&mut rng);
                    orthogonalize_twice(&basis, n, m, &mut v);
                    let nv = vec_norm(&v);
                    if nv < 1e-8 {
                        continue; // unlucky draw; try another
                    }
                    for x in &mut v {
                        *x /= nv;
                    }
                    (v, 0.0)
                }
            };
            basis.extend_from_slice(&v);
            m += 1;

            let mut w = vec![0.0f64; n];
            op.apply(&v, &mut w, &mut scratch);
            matvecs += 1;
            let bnorm = vec_norm(&w);
            let t = orthogonalize_twice(&basis, n, m, &mut w);
            for (i, &ti) in t.iter().enumerate() {
                t_mat[i * m_max + (m - 1)] = ti;
                t_mat[(m - 1) * m_max + i] = ti;
            }
            let beta = vec_norm(&w);
            if beta <= BREAKDOWN_REL * bnorm.max(1.0) {
                candidate = None;
            } else {
                for x in &mut w {
                    *x /= beta;
                }
                candidate = Some((w, beta));
            }
            if m >= f && matvecs >= max_iter {
                break;
            }
        }

        // Rayleigh-Ritz on the current basis.
        let (theta, s_vecs) = sym_eig_desc(&t_mat, m_max, m);
        let beta_pend = candidate.as_ref().map_or(0.0, |(_, b)| *b);
        let checked = f.min(m);
        let residuals: Vec<f64> = (0..checked)
            .map(|j| beta_pend * s_vecs.get(m - 1, j).abs())
            .collect();
        let max_residual = residuals.iter().cloned().fold(0.0f64, f64::max);
        let scale = theta.first().map_or(0.0, |t| t.abs()).max(f64::MIN_POSITIVE);
        let converged = m >= f && residuals.iter().all(|&r| r <= tol * scale);

        let exhausted = matvecs >= max_iter || m >= n || m < m_max;
        if converged || exhausted {
            break (
                theta,
                s_vecs,
                ConvergenceReport {
                    converged,
                    matvecs,
                    restarts,
                    residuals,
                    max_residual,
                },
            );
        }

        // Thick restart: keep the leading Ritz vectors, reuse the pending
        // residual vector as the next candidate (it is orthogonal to every
        // kept Ritz vector). The coupling row of the projected operator is
        // recovered exactly when the candidate's column is processed.
        let l = keep.min(m - 1).max(1);
        let mut new_basis = vec![0.0f64; l * n];
        {
            let fill = |(j, row): (usize, &mut [f64])| {
                for i in 0..m {
                    let c = s_vecs.get(i, j);
                    if c == 0.0 {
                        continue;
                    }
                    let src = &basis[i * n..(i + 1) * n];
                    for (r, s) in row.iter_mut().zip(src) {
                        *r += c * s;
                    }
                }
            };
            #[cfg(feature = "parallel")]
            new_basis.par_chunks_mut(n).enumerate().for_each(fill);
            #[cfg(not(feature = "parallel"))]
            new_basis.chunks_mut(n).enumerate().for_each(fill);
        }
        basis = new_basis;
        m = l;
        t_mat.iter_mut().for_each(|x| *x = 0.0);
        for (j, &th) in theta.iter().enumerate().take(l) {
            t_mat[j * m_max + j] = th;
        }
        restarts += 1;
    };

    // Assemble factors from the top-f Ritz pairs (padded with zeros in the
    // pathological case where the basis could not reach f vectors).
    let avail = f.min(m);
    // Ritz values at or below the Gram operator's noise floor (relative
    // 1e-12, i.e. σ below σ_max·1e-6 — the resolution limit of squaring)
    // are reported as exactly zero: "rank deficient", not "tiny".
    let theta_max = theta.first().copied().unwrap_or(0.0).max(0.0);
    let sigma: Vec<f64> = (0..f)
        .map(|j| {
            if j < avail && theta[j] > theta_max * 1e-12 {
                theta[j].sqrt()
            } else {
                0.0
            }
        })
        .collect();

    // Ritz vectors on the operated side.
    let mut ritz = DenseMatrix::zeros(n, f);
    for j in 0..avail {
        for i in 0..m {
            let c = s_vecs.get(i, j);
            if c == 0.0 {
                continue;
            }
            let src = &basis[i * n..(i + 1) * n];
            for (r, &s) in src.iter().enumerate() {
                let cur = ritz.get(r, j);
                ritz.set(r, j, cur + c * s);
            }
        }
    }

    // Derived side: cross-apply and scale by 1/σ, then re-orthonormalise
    // the nonzero columns (modified Gram-Schmidt) to pin down the 1e-8
    // orthonormality contract even at loose solver tolerances.
    let co = op.co_dim();
    let mut derived_cols: Vec<Vec<f64>> = Vec::with_capacity(f);
    let mut ritz_col = vec![0.0f64; n];
    for (j, &sj) in sigma.iter().enumerate() {
        if sj == 0.0 {
            derived_cols.push(vec![0.0f64; co]);
            continue;
        }
        for (i, dst) in ritz_col.iter_mut().enumerate() {
            *dst = ritz.get(i, j);
        }
        let mut out = vec![0.0f64; co];
        op.cross_apply(&ritz_col, &mut out);
        for x in &mut out {
            *x /= sj;
        }
        derived_cols.push(out);
    }
    for j in 0..f {
        if sigma[j] == 0.0 {
            continue;
        }
        let (before, rest) = derived_cols.split_at_mut(j);
        let cur = &mut rest[0];
        for (i, prev) in before.iter().enumerate() {
            if sigma[i] == 0.0 {
                continue;
            }
            let c = dot(prev, cur);
            if c != 0.0 {
                for (x, y) in cur.iter_mut().zip(prev) {
                    *x -= c * y;
                }
            }
        }
        let nv = vec_norm(cur);
        if nv > 1e-300 {
            for x in cur.iter_mut() {
                *x /= nv;
            }
        }
    }
    let mut derived = DenseMatrix::zeros(co, f);
    for (j, col) in derived_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            derived.set(i, j, v);
        }
    }

    let (mut p_tilde, mut q_tilde) = if op.items_side {
        (derived, ritz)
    } else {
        (ritz, derived)
    };
    sign_fix_columns(&mut q_tilde, Some(&mut p_tilde));
    Ok(SvdOutcome {
        factors: SpectralFactors {
            p_tilde,
            sigma,
            q_tilde,
        },
        report,
    })
}
