//! Spectral recommenders and the trace-maximisation view that justifies them.
//!
//! PSGE fits a truncated SVD of the propensity-normalised matrix
//! `R~ = D_U^{-α} R D_I^{-β}` and scores with
//! `R̂ = D_U^{α} P~ Λ Q~ᵀ D_I^{β̃}`, where the predict-time item exponent β̃
//! is decoupled from the fit-time β so popularity sweeps re-score without
//! refactorising. PureSVD (`R̂ = R Q Qᵀ`) and SGMC (`α = β = 1/2`) are the
//! classical special cases; EASE is the closed-form linear baseline. The
//! module also houses [`quadratic_form_trace`] and [`rayleigh_ritz_optimum`],
//! the quadratic-form machinery connecting these models to trace
//! maximisation over the bipartite adjacency.

use log::warn;
use nalgebra::{Cholesky, DMatrix};
use thiserror::Error;

use crate::dense::{dot, DenseError, DenseMatrix};
use crate::sparse::{degrees, normalize_interactions, DegreeVectors, InteractionMatrix, SparseError};
use crate::spectral::{
    dense_symmetric_eig, truncated_svd, ConvergenceReport, SpectralError, SpectralFactors,
};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Largest item count for which the dense item-item EASE system is solved.
pub const EASE_ITEM_GUARD: usize = 20_000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("user {user} has no training interactions; no spectral score is defined")]
    ColdUser { user: usize },
    #[error("training matrix has no interactions")]
    EmptyTraining,
    #[error("requested rank {f} outside [1, {max}]")]
    RankOutOfRange { f: usize, max: usize },
    #[error("{n_items} items exceed the dense item-item guard of {max}")]
    SizeGuard { n_items: usize, max: usize },
    #[error("ridge weight must be positive, got {lambda}")]
    BadRegularization { lambda: f64 },
    #[error("item-item system is singular; raise the ridge weight")]
    SingularSystem,
    #[error("operand has {got} rows, operator dimension is {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("weight vector has {got} entries, expected {expected}")]
    BadWeights { got: usize, expected: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// Settings forwarded to the iterative eigensolver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative Ritz-residual tolerance.
    pub tol: f64,
    /// Cap on operator applications; `None` uses `10·f + 100`.
    pub max_iter: Option<usize>,
    /// Start-vector seed.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn effective_max_iter(&self, f: usize) -> usize {
        self.max_iter.unwrap_or(10 * f + 100)
    }
}

// ---------------------------------------------------------------------------
// Scoring abstraction
// ---------------------------------------------------------------------------

/// Anything that can produce a full item-score vector for a user. Rankers
/// and the evaluation loop are written against this.
pub trait Scorer: Sync {
    fn n_users(&self) -> usize;
    fn n_items(&self) -> usize;
    /// Scores for every item; finite; cold users are an error.
    fn score_user(&self, user: usize) -> Result<Vec<f64>, ModelError>;
    /// Short label for reports ("psge", "puresvd", ...).
    fn tag(&self) -> &'static str;
}

// ---------------------------------------------------------------------------
// PSGE
// ---------------------------------------------------------------------------

/// Propensity-weighted spectral model: factors of `R~ = D_U^{-α} R D_I^{-β}`
/// plus the training degrees that scale scores back.
#[derive(Debug, Clone, PartialEq)]
pub struct PsgeModel {
    pub factors: SpectralFactors,
    pub alpha: f64,
    pub beta: f64,
    /// Predict-time item exponent; initialised to `beta`, tunable afterwards
    /// without refactorising.
    pub beta_tilde: f64,
    /// Degrees of the raw training matrix.
    pub degrees: DegreeVectors,
}

impl PsgeModel {
    /// Re-targets the predict-time item exponent. No refitting happens —
    /// the factors are unchanged.
    pub fn set_beta_tilde(&mut self, beta_tilde: f64) {
        self.beta_tilde = beta_tilde;
    }

    pub fn rank(&self) -> usize {
        self.factors.rank()
    }
}

/// Fits PSGE and also hands back the solver's convergence report.
pub fn fit_psge_with_report(
    r_train: &InteractionMatrix,
    alpha: f64,
    beta: f64,
    f: usize,
    solver: &SolverConfig,
) -> Result<(PsgeModel, ConvergenceReport), ModelError> {
    if r_train.nnz() == 0 {
        return Err(ModelError::EmptyTraining);
    }
    let r_tilde = normalize_interactions(r_train, alpha, beta);
    let outcome = truncated_svd(
        &r_tilde,
        f,
        solver.tol,
        solver.effective_max_iter(f),
        solver.seed,
    )?;
    if !outcome.report.converged {
        warn!(
            "eigensolver stopped before tolerance: max residual {:e} after {} matvecs",
            outcome.report.max_residual, outcome.report.matvecs
        );
    }
    let model = PsgeModel {
        factors: outcome.factors,
        alpha,
        beta,
        beta_tilde: beta,
        degrees: degrees(r_train),
    };
    Ok((model, outcome.report))
}

/// Fits PSGE: truncated SVD of the `(α, β)`-normalised training matrix.
/// Non-convergence is logged, not raised; call [`fit_psge_with_report`]
/// when the report matters.
pub fn fit_psge(
    r_train: &InteractionMatrix,
    alpha: f64,
    beta: f64,
    f: usize,
    solver: &SolverConfig,
) -> Result<PsgeModel, ModelError> {
    fit_psge_with_report(r_train, alpha, beta, f, solver).map(|(m, _)| m)
}

/// SGMC is PSGE at the symmetric normalisation `α = β = 1/2`.
pub fn fit_sgmc(
    r_train: &InteractionMatrix,
    f: usize,
    solver: &SolverConfig,
) -> Result<PsgeModel, ModelError> {
    fit_psge(r_train, 0.5, 0.5, f, solver)
}

/// Scores `score(u, i) = d_u^{α} · (p~_u · (σ ⊙ q~_i)) · d_i^{β̃}` for the
/// given candidate items (`None` = all items). Items with zero training
/// degree score exactly 0 at every β̃ — they are never recommended.
pub fn predict_scores(
    model: &PsgeModel,
    user: usize,
    candidates: Option<&[usize]>,
) -> Result<Vec<f64>, ModelError> {
    let d_u = model.degrees.user_degrees[user];
    if d_u <= 0.0 {
        return Err(ModelError::ColdUser { user });
    }
    let f = model.rank();
    let user_scale = d_u.powf(model.alpha);
    // w = d_u^α · (σ ⊙ p~_u)
    let mut w = vec![0.0f64; f];
    for (j, wj) in w.iter_mut().enumerate() {
        *wj = user_scale * model.factors.sigma[j] * model.factors.p_tilde.get(user, j);
    }
    let score_item = |i: usize| -> f64 {
        let d_i = model.degrees.item_degrees[i];
        if d_i <= 0.0 {
            return 0.0;
        }
        dot(&w, model.factors.q_tilde.row(i)) * d_i.powf(model.beta_tilde)
    };
    let scores = match candidates {
        Some(ids) => ids.iter().map(|&i| score_item(i)).collect(),
        None => (0..model.factors.n_items()).map(score_item).collect(),
    };
    Ok(scores)
}

impl Scorer for PsgeModel {
    fn n_users(&self) -> usize {
        self.factors.n_users()
    }

    fn n_items(&self) -> usize {
        self.factors.n_items()
    }

    fn score_user(&self, user: usize) -> Result<Vec<f64>, ModelError> {
        predict_scores(self, user, None)
    }

    fn tag(&self) -> &'static str {
        "psge"
    }
}

/// Independently coded projection form of the same prediction rule:
/// `R̂ = R D_I^{-β} Q~ Q~ᵀ D_I^{β̃}`. Algebraically identical to
/// [`predict_scores`] on the training-row space; kept as a second route so
/// the two can be checked against each other rather than against themselves.
#[derive(Debug)]
pub struct ProjectionScorer<'a> {
    factors: &'a SpectralFactors,
    train: &'a InteractionMatrix,
    item_degrees: Vec<f64>,
    beta: f64,
    beta_tilde: f64,
}

impl<'a> ProjectionScorer<'a> {
    pub fn new(
        factors: &'a SpectralFactors,
        train: &'a InteractionMatrix,
        beta: f64,
        beta_tilde: f64,
    ) -> Self {
        Self {
            factors,
            train,
            item_degrees: degrees(train).item_degrees,
            beta,
            beta_tilde,
        }
    }
}

impl Scorer for ProjectionScorer<'_> {
    fn n_users(&self) -> usize {
        self.train.n_users()
    }

    fn n_items(&self) -> usize {
        self.train.n_items()
    }

    fn score_user(&self, user: usize) -> Result<Vec<f64>, ModelError> {
        let (cols, vals) = self.train.row(user);
        if cols.is_empty() {
            return Err(ModelError::ColdUser { user });
        }
        let f = self.factors.rank();
        // v = r_u D_I^{-β} Q~  (f-vector)
        let mut v = vec![0.0f64; f];
        for (&i, &r_ui) in cols.iter().zip(vals) {
            let d_i = self.item_degrees[i];
            let wt = r_ui * d_i.powf(-self.beta);
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += wt * self.factors.q_tilde.get(i, j);
            }
        }
        // score_i = (v · q~_i) · d_i^{β̃}, with cold items pinned to 0.
        let scores = (0..self.n_items())
            .map(|i| {
                let d_i = self.item_degrees[i];
                if d_i <= 0.0 {
                    0.0
                } else {
                    dot(&v, self.factors.q_tilde.row(i)) * d_i.powf(self.beta_tilde)
                }
            })
            .collect();
        Ok(scores)
    }

    fn tag(&self) -> &'static str {
        "psge-projection"
    }
}

// ---------------------------------------------------------------------------
// PureSVD
// ---------------------------------------------------------------------------

/// PureSVD keeps only the top right-singular vectors of the raw matrix;
/// prediction is the row-space projection `R̂ = R Q Qᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureSvdModel {
    /// Top right-singular vectors of `R`, `n_items x f`.
    pub q: DenseMatrix,
    pub f: usize,
}

pub fn fit_pure_svd(
    r_train: &InteractionMatrix,
    f: usize,
    solver: &SolverConfig,
) -> Result<PureSvdModel, ModelError> {
    if r_train.nnz() == 0 {
        return Err(ModelError::EmptyTraining);
    }
    let outcome = truncated_svd(
        r_train,
        f,
        solver.tol,
        solver.effective_max_iter(f),
        solver.seed,
    )?;
    if !outcome.report.converged {
        warn!(
            "eigensolver stopped before tolerance: max residual {:e} after {} matvecs",
            outcome.report.max_residual, outcome.report.matvecs
        );
    }
    Ok(PureSvdModel {
        q: outcome.factors.q_tilde,
        f,
    })
}

/// Scorer binding a PureSVD model to the training matrix its predictions
/// project (the model itself stores only `Q`).
#[derive(Debug)]
pub struct PureSvdScorer<'a> {
    pub model: &'a PureSvdModel,
    pub train: &'a InteractionMatrix,
}

impl Scorer for PureSvdScorer<'_> {
    fn n_users(&self) -> usize {
        self.train.n_users()
    }

    fn n_items(&self) -> usize {
        self.train.n_items()
    }

    fn score_user(&self, user: usize) -> Result<Vec<f64>, ModelError> {
        let (cols, vals) = self.train.row(user);
        if cols.is_empty() {
            return Err(ModelError::ColdUser { user });
        }
        let f = self.model.f;
        let mut v = vec![0.0f64; f];
        for (&i, &r_ui) in cols.iter().zip(vals) {
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += r_ui * self.model.q.get(i, j);
            }
        }
        Ok((0..self.n_items())
            .map(|i| dot(&v, self.model.q.row(i)))
            .collect())
    }

    fn tag(&self) -> &'static str {
        "puresvd"
    }
}

// ---------------------------------------------------------------------------
// EASE
// ---------------------------------------------------------------------------

/// Closed-form linear item-item model with a zero diagonal; prediction is
/// `R̂ = R B`.
#[derive(Debug, Clone, PartialEq)]
pub struct EaseModel {
    /// Item-item weight matrix, `n_items x n_items`, `diag(b) = 0`.
    pub b: DenseMatrix,
    pub lambda_reg: f64,
}

/// Solves the ridge-regularised item-item system in closed form:
/// `P = (RᵀR + λI)^{-1}`, `B = I - P · diag(1/diag(P))`, `diag(B) = 0`.
/// Dense in the item dimension, hence the [`EASE_ITEM_GUARD`].
pub fn fit_ease(r_train: &InteractionMatrix, lambda_reg: f64) -> Result<EaseModel, ModelError> {
    let n_items = r_train.n_items();
    if n_items > EASE_ITEM_GUARD {
        return Err(ModelError::SizeGuard {
            n_items,
            max: EASE_ITEM_GUARD,
        });
    }
    if !(lambda_reg > 0.0) {
        return Err(ModelError::BadRegularization { lambda: lambda_reg });
    }
    if r_train.nnz() == 0 {
        return Err(ModelError::EmptyTraining);
    }
    // Gram matrix G = RᵀR, accumulated row by row.
    let mut gram = DMatrix::<f64>::zeros(n_items, n_items);
    for u in 0..r_train.n_users() {
        let (cols, vals) = r_train.row(u);
        for (&i, &vi) in cols.iter().zip(vals) {
            for (&j, &vj) in cols.iter().zip(vals) {
                gram[(i, j)] += vi * vj;
            }
        }
    }
    for i in 0..n_items {
        gram[(i, i)] += lambda_reg;
    }
    let p = Cholesky::new(gram)
        .ok_or(ModelError::SingularSystem)?
        .inverse();
    let mut b = DenseMatrix::zeros(n_items, n_items);
    for j in 0..n_items {
        let pjj = p[(j, j)];
        if pjj == 0.0 {
            return Err(ModelError::SingularSystem);
        }
        for i in 0..n_items {
            if i != j {
                b.set(i, j, -p[(i, j)] / pjj);
            }
        }
    }
    Ok(EaseModel { b, lambda_reg })
}

/// Scorer binding an EASE model to the training matrix.
#[derive(Debug)]
pub struct EaseScorer<'a> {
    pub model: &'a EaseModel,
    pub train: &'a InteractionMatrix,
}

impl Scorer for EaseScorer<'_> {
    fn n_users(&self) -> usize {
        self.train.n_users()
    }

    fn n_items(&self) -> usize {
        self.train.n_items()
    }

    fn score_user(&self, user: usize) -> Result<Vec<f64>, ModelError> {
        let (cols, vals) = self.train.row(user);
        if cols.is_empty() {
            return Err(ModelError::ColdUser { user });
        }
        let n = self.n_items();
        let mut scores = vec![0.0f64; n];
        for (&i, &r_ui) in cols.iter().zip(vals) {
            let row = self.model.b.row(i);
            for (s, bij) in scores.iter_mut().zip(row) {
                *s += r_ui * bij;
            }
        }
        Ok(scores)
    }

    fn tag(&self) -> &'static str {
        "ease"
    }
}

// ---------------------------------------------------------------------------
// Trace maximisation
// ---------------------------------------------------------------------------

/// A symmetric linear operator applied blockwise; implemented by dense
/// symmetric matrices and by the bipartite graph's normalised adjacency.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `A · X`; callers guarantee `x.rows() == self.dim()`.
    fn apply_block(&self, x: &DenseMatrix) -> DenseMatrix;
}

impl SymmetricOperator for DenseMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.rows(), self.cols(), "operator must be square");
        self.rows()
    }

    fn apply_block(&self, x: &DenseMatrix) -> DenseMatrix {
        self.matmul(x).expect("dimension checked by caller")
    }
}

/// `Tr(Xᵀ A X)`: total quadratic energy of the columns of `X` under `A`.
/// For the normalised bipartite adjacency and stacked embeddings
/// `X = [P; Q]` this equals `2 Σ_{(u,i) observed} w~_ui · (p_u · q_i)` —
/// twice the summed prediction scores over the observed interactions.
pub fn quadratic_form_trace<O: SymmetricOperator + ?Sized>(
    op: &O,
    x: &DenseMatrix,
) -> Result<f64, ModelError> {
    if x.rows() != op.dim() {
        return Err(ModelError::DimensionMismatch {
            got: x.rows(),
            expected: op.dim(),
        });
    }
    let ax = op.apply_block(x);
    Ok(dot(x.data(), ax.data()))
}

/// The orthonormal `n x f` block maximising `Tr(Xᵀ A X)` — the top-f
/// eigenvectors — together with the optimum `Σ λ_i`. With diagonal weights
/// `Σ = diag(σ)` the weighted trace `Tr(Xᵀ A X Σ)` is maximised by the same
/// block (for nonincreasing σ ≥ 0) and the returned value is `Σ λ_i σ_i`.
pub fn rayleigh_ritz_optimum(
    a: &DenseMatrix,
    f: usize,
    sigma_weights: Option<&[f64]>,
) -> Result<(DenseMatrix, f64), ModelError> {
    let n = a.rows();
    if f == 0 || f > n {
        return Err(ModelError::RankOutOfRange { f, max: n });
    }
    if let Some(w) = sigma_weights {
        if w.len() != f {
            return Err(ModelError::BadWeights {
                got: w.len(),
                expected: f,
            });
        }
    }
    let eig = dense_symmetric_eig(a)?;
    let x = eig.vectors.truncate_cols(f);
    let value = match sigma_weights {
        Some(w) => eig.values[..f]
            .iter()
            .zip(w)
            .map(|(l, s)| l * s)
            .sum(),
        None => eig.values[..f].iter().sum(),
    };
    Ok((x, value))
}

/// Scores every user through `scorer`, in parallel when the `parallel`
/// feature is on; row order of the result is the user order either way.
pub fn score_all_users<S: Scorer + ?Sized>(
    scorer: &S,
) -> Vec<Result<Vec<f64>, ModelError>> {
    let one = |u: usize| scorer.score_user(u);
    #[cfg(feature = "parallel")]
    {
        (0..scorer.n_users()).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..scorer.n_users()).map(one).collect()
    }
}
