//! `psge` — command-line driver for the spectral top-N recommender
//! experiments: dataset preparation, model fitting and evaluation,
//! hyperparameter grid search, the popularity/accuracy beta-tilde sweep,
//! and the graph-convolution filter-response curve.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "psge",
    version,
    about = "Spectral top-N recommendation experiments (PSGE, PureSVD, SGMC, EASE)"
)]
struct Cli {
    /// Experiment config (TOML). Required by every command except
    /// filter-curve, which falls back to built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a raw interaction log, apply the k-core filter, split it
    /// per-user into train/validation/test, and save the split.
    Prepare,
    /// Fit the configured model and evaluate it on the configured phase;
    /// writes report.json, report.csv and model.psgm.
    FitEval,
    /// Exhaustive (alpha, beta, f) search on the validation split;
    /// writes leaderboard.csv and best.json.
    GridSearch,
    /// Fit once, then re-score across a grid of predict-time exponents
    /// beta_tilde; writes sweep.csv (accuracy vs. popularity).
    SweepBeta,
    /// Tabulate the K-layer graph-convolution spectral response
    /// g(lambda) = (1/(K+1)) * (1 - lambda^(K+1)) / (1 - lambda).
    FilterCurve,
}

#[cfg(feature = "parallel")]
fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(threads: Option<usize>) {
    if threads.is_some() {
        log::warn!("--threads ignored: built without the `parallel` feature");
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => match cli.command {
            Command::FilterCurve => ExperimentConfig::default(),
            _ => bail!("this command needs --config <FILE>"),
        },
    };
    cfg.apply_overrides(cli.seed, cli.out.clone());
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    init_threads(cli.threads);
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Prepare => commands::cmd_prepare(&cfg),
        Command::FitEval => commands::cmd_fit_eval(&cfg),
        Command::GridSearch => commands::cmd_grid_search(&cfg),
        Command::SweepBeta => commands::cmd_sweep_beta(&cfg),
        Command::FilterCurve => commands::cmd_filter_curve(&cfg),
    }
}
