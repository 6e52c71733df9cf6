//! Spectral top-N recommendation from implicit feedback.
//!
//! The centrepiece is PSGE: a truncated SVD of the propensity-normalised
//! interaction matrix `R~ = D_U^-alpha R D_I^-beta`, scored back through the
//! degree scalings with an independently tunable predict-time item exponent.
//! PureSVD (`alpha = beta = 0`) and SGMC (`alpha = beta = 1/2`) fall out as
//! special cases, and a closed-form EASE solver is included as a baseline.
//!
//! Supporting casts: a thick-restart Lanczos eigensolver for the truncated
//! factorisation, a graph-convolution lab that measures the spectral
//! behaviour of LightGCN-style propagation, dataset ingestion with k-core
//! filtering and per-user holdout splits, and ranking metrics (NDCG, recall,
//! average recommendation popularity).

pub mod conv;
pub mod dense;
pub mod eval;
pub mod ingest;
pub mod io;
pub mod models;
pub mod sparse;
pub mod spectral;
#[cfg(test)]
pub(crate) mod testkit;
pub(crate) mod util;
