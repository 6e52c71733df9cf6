//! Experiment configuration: a TOML file with sections, every field
//! defaulted, unknown keys rejected. Each command writes the fully resolved
//! config next to its outputs so a run can be reproduced from its artifacts
//! alone.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use psge::ingest::CsvSpec;
use psge::models::SolverConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Split seed; `--seed` overrides it.
    pub seed: u64,
    pub data: DataSection,
    pub prepare: PrepareSection,
    pub model: ModelSection,
    pub solver: SolverSection,
    pub eval: EvalSection,
    pub grid: GridSection,
    pub sweep: SweepSection,
    pub filter_curve: FilterCurveSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Raw interaction log; ignored when `split_dir` is set.
    pub path: Option<PathBuf>,
    /// Previously prepared split directory (see the `prepare` command).
    pub split_dir: Option<PathBuf>,
    pub delimiter: String,
    pub has_header: bool,
    pub user_col: usize,
    pub item_col: usize,
    pub weight_col: Option<usize>,
    pub timestamp_col: Option<usize>,
    pub min_rating: Option<f64>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            split_dir: None,
            delimiter: ",".to_owned(),
            has_header: false,
            user_col: 0,
            item_col: 1,
            weight_col: None,
            timestamp_col: None,
            min_rating: None,
        }
    }
}

impl DataSection {
    pub fn csv_spec(&self) -> CsvSpec {
        CsvSpec {
            delimiter: self.delimiter.clone(),
            has_header: self.has_header,
            user_col: self.user_col,
            item_col: self.item_col,
            weight_col: self.weight_col,
            timestamp_col: self.timestamp_col,
            min_rating: self.min_rating,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareSection {
    pub k_core: usize,
    pub ratios: [f64; 3],
}

impl Default for PrepareSection {
    fn default() -> Self {
        Self {
            k_core: 10,
            ratios: [0.8, 0.1, 0.1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Psge,
    PureSvd,
    Ease,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// psge | sgmc | puresvd | ease. `sgmc` is PSGE pinned to α = β = 1/2.
    pub kind: String,
    pub alpha: f64,
    pub beta: f64,
    /// Predict-time item exponent; defaults to `beta`.
    pub beta_tilde: Option<f64>,
    pub f: usize,
    /// EASE ridge weight.
    pub lambda_reg: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: "psge".to_owned(),
            alpha: 0.5,
            beta: 0.5,
            beta_tilde: None,
            f: 64,
            lambda_reg: 100.0,
        }
    }
}

/// Model settings after alias expansion: `sgmc` pins the exponents.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedModel {
    pub kind: ModelKind,
    pub alpha: f64,
    pub beta: f64,
    pub beta_tilde: f64,
    pub f: usize,
    pub lambda_reg: f64,
}

impl ModelSection {
    pub fn resolve(&self) -> Result<ResolvedModel> {
        let (kind, alpha, beta) = match self.kind.as_str() {
            "psge" => (ModelKind::Psge, self.alpha, self.beta),
            "sgmc" => (ModelKind::Psge, 0.5, 0.5),
            "puresvd" => (ModelKind::PureSvd, 0.0, 0.0),
            "ease" => (ModelKind::Ease, 0.0, 0.0),
            other => bail!("unknown model kind {other:?}; expected psge, sgmc, puresvd or ease"),
        };
        if self.kind == "sgmc" && (self.alpha != 0.5 || self.beta != 0.5) {
            bail!("sgmc pins alpha = beta = 0.5; set kind = \"psge\" to vary them");
        }
        if !alpha.is_finite() || !beta.is_finite() {
            bail!("alpha and beta must be finite");
        }
        if self.f == 0 {
            bail!("f must be at least 1");
        }
        let beta_tilde = self.beta_tilde.unwrap_or(beta);
        if !beta_tilde.is_finite() {
            bail!("beta_tilde must be finite");
        }
        Ok(ResolvedModel {
            kind,
            alpha,
            beta,
            beta_tilde,
            f: self.f,
            lambda_reg: self.lambda_reg,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
            seed: 0,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// validation | test.
    pub phase: String,
    pub cutoffs: Vec<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            phase: "validation".to_owned(),
            cutoffs: vec![5, 20],
        }
    }
}

impl EvalSection {
    pub fn phase(&self) -> Result<psge::eval::Phase> {
        match self.phase.as_str() {
            "validation" => Ok(psge::eval::Phase::Validation),
            "test" => Ok(psge::eval::Phase::Test),
            other => bail!("unknown phase {other:?}; expected validation or test"),
        }
    }
}

fn default_exponent_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub factors: Vec<usize>,
    /// Cutoff whose validation NDCG picks the winner.
    pub select_cutoff: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            alphas: default_exponent_grid(),
            betas: default_exponent_grid(),
            factors: vec![16, 32, 64],
            select_cutoff: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub beta_tilde: Vec<f64>,
    pub cutoff: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            beta_tilde: default_exponent_grid(),
            cutoff: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterCurveSection {
    pub k_list: Vec<usize>,
    pub lambdas: Vec<f64>,
}

impl Default for FilterCurveSection {
    fn default() -> Self {
        Self {
            k_list: vec![0, 1, 2, 3, 4, 8],
            // 201 points across the spectrum's domain [-1, 1].
            lambdas: (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs/out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(cfg)
    }

    /// Applies command-line overrides; flags beat file values.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>) {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.output.dir = o;
        }
    }

    /// Serialized form written next to every run's outputs.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes: plain data fields")
    }
}
