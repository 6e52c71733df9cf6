//! The experiment commands: prepare, fit-eval, grid-search, sweep-beta,
//! filter-curve. Every command creates its output directory, writes its
//! primary artifacts deterministically (timestamps go to a separate
//! metadata file), and drops the resolved config next to the results.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use log::info;
use serde::Serialize;

use psge::conv::filter_response;
use psge::eval::{evaluate, EvalReport, Phase};
use psge::ingest::{
    k_core_filter, load_split, load_triplets, merge_train_val, save_split, split_per_user,
    SplitDataset,
};
use psge::io::{save_model, ModelFile};
use psge::models::{
    fit_ease, fit_psge_with_report, fit_pure_svd, EaseModel, EaseScorer, PsgeModel, PureSvdModel,
    PureSvdScorer, SolverConfig,
};
use psge::sparse::{degrees, InteractionMatrix};
use psge::spectral::truncated_svd;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ModelKind, ResolvedModel};

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    started_unix_s: u64,
    finished_unix_s: u64,
}

/// Writes `resolved_config.toml` and `run_metadata.json`. The resolved
/// config is part of the deterministic artifact set; wall-clock times are
/// quarantined here so primary outputs stay byte-identical across reruns.
fn write_run_artifacts(
    cfg: &ExperimentConfig,
    dir: &Path,
    command: &str,
    started: u64,
) -> Result<()> {
    std::fs::write(dir.join("resolved_config.toml"), cfg.to_toml())
        .context("writing resolved_config.toml")?;
    let meta = RunMetadata {
        command,
        started_unix_s: started,
        finished_unix_s: unix_seconds(),
    };
    std::fs::write(
        dir.join("run_metadata.json"),
        serde_json::to_string_pretty(&meta).expect("flat struct"),
    )
    .context("writing run_metadata.json")?;
    Ok(())
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

/// Loads a prepared split when `data.split_dir` is set, otherwise runs the
/// full load → dedup → k-core → split pipeline on `data.path`.
fn obtain_split(cfg: &ExperimentConfig) -> Result<SplitDataset> {
    if let Some(dir) = &cfg.data.split_dir {
        let (split, meta) = load_split(dir)
            .with_context(|| format!("loading prepared split from {}", dir.display()))?;
        info!(
            "loaded split: {} users, {} items, {} interactions (seed {})",
            meta.n_users,
            meta.n_items,
            meta.n_train + meta.n_validation + meta.n_test,
            meta.seed
        );
        return Ok(split);
    }
    let Some(path) = &cfg.data.path else {
        bail!("config needs data.path (raw log) or data.split_dir (prepared split)");
    };
    let raw = load_triplets(path, &cfg.data.csv_spec())?;
    let filtered = k_core_filter(&raw, cfg.prepare.k_core);
    if filtered.is_empty() {
        bail!(
            "k-core filter with k = {} removed every interaction",
            cfg.prepare.k_core
        );
    }
    let r = cfg.prepare.ratios;
    Ok(split_per_user(&filtered, (r[0], r[1], r[2]), cfg.seed)?)
}

pub fn cmd_prepare(cfg: &ExperimentConfig) -> Result<()> {
    let started = unix_seconds();
    let dir = out_dir(cfg)?;
    if cfg.data.path.is_none() {
        bail!("prepare needs data.path pointing at a raw interaction log");
    }
    let split = obtain_split(cfg)?;
    let split_dir = dir.join("split");
    save_split(&split, Some(cfg.prepare.k_core), &split_dir)?;
    let total = split.train.nnz() + split.validation.nnz() + split.test.nnz();
    println!(
        "prepared: {} users, {} items, {} interactions ({} train / {} validation / {} test) -> {}",
        split.user_index.len(),
        split.item_index.len(),
        total,
        split.train.nnz(),
        split.validation.nnz(),
        split.test.nnz(),
        split_dir.display()
    );
    write_run_artifacts(cfg, &dir, "prepare", started)
}

enum FittedModel {
    Psge(PsgeModel),
    PureSvd(PureSvdModel),
    Ease(EaseModel),
}

fn fit_model(
    resolved: &ResolvedModel,
    fit_matrix: &InteractionMatrix,
    solver: &SolverConfig,
) -> Result<FittedModel> {
    Ok(match resolved.kind {
        ModelKind::Psge => {
            let (mut model, report) = fit_psge_with_report(
                fit_matrix,
                resolved.alpha,
                resolved.beta,
                resolved.f,
                solver,
            )?;
            model.set_beta_tilde(resolved.beta_tilde);
            info!(
                "factorization: {} matvecs, {} restarts, max residual {:.3e}, converged = {}",
                report.matvecs, report.restarts, report.max_residual, report.converged
            );
            FittedModel::Psge(model)
        }
        ModelKind::PureSvd => FittedModel::PureSvd(fit_pure_svd(fit_matrix, resolved.f, solver)?),
        ModelKind::Ease => FittedModel::Ease(fit_ease(fit_matrix, resolved.lambda_reg)?),
    })
}

fn evaluate_fitted(
    fitted: &FittedModel,
    fit_matrix: &InteractionMatrix,
    split: &SplitDataset,
    phase: Phase,
    cutoffs: &[usize],
) -> Result<EvalReport> {
    let report = match fitted {
        FittedModel::Psge(m) => evaluate(m, fit_matrix, split, phase, cutoffs)?,
        FittedModel::PureSvd(m) => evaluate(
            &PureSvdScorer {
                model: m,
                train: fit_matrix,
            },
            fit_matrix,
            split,
            phase,
            cutoffs,
        )?,
        FittedModel::Ease(m) => evaluate(
            &EaseScorer {
                model: m,
                train: fit_matrix,
            },
            fit_matrix,
            split,
            phase,
            cutoffs,
        )?,
    };
    Ok(report)
}

fn hyperparameters(resolved: &ResolvedModel) -> Vec<(String, f64)> {
    match resolved.kind {
        ModelKind::Psge => vec![
            ("alpha".into(), resolved.alpha),
            ("beta".into(), resolved.beta),
            ("beta_tilde".into(), resolved.beta_tilde),
            ("f".into(), resolved.f as f64),
        ],
        ModelKind::PureSvd => vec![("f".into(), resolved.f as f64)],
        ModelKind::Ease => vec![("lambda_reg".into(), resolved.lambda_reg)],
    }
}

fn fit_matrix_for(split: &SplitDataset, phase: Phase) -> InteractionMatrix {
    match phase {
        Phase::Validation => split.train.clone(),
        Phase::Test => merge_train_val(split),
    }
}

/// Writes the report as one CSV row: identity columns, then ndcg@n,
/// recall@n and avg_pop@n for each cutoff in ascending order.
fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let cutoffs: Vec<usize> = report.ndcg.keys().copied().collect();
    let mut header = vec!["model".to_owned(), "phase".to_owned()];
    for &n in &cutoffs {
        header.push(format!("ndcg@{n}"));
    }
    for &n in &cutoffs {
        header.push(format!("recall@{n}"));
    }
    for &n in &cutoffs {
        header.push(format!("avg_pop@{n}"));
    }
    header.push("n_users_evaluated".to_owned());
    w.write_record(&header)?;
    let mut row = vec![
        report.metadata.model.clone(),
        report.metadata.phase.to_string(),
    ];
    for &n in &cutoffs {
        row.push(format!("{:.6}", report.ndcg[&n]));
    }
    for &n in &cutoffs {
        row.push(format!("{:.6}", report.recall[&n]));
    }
    for &n in &cutoffs {
        row.push(format!("{:.6}", report.avg_popularity[&n]));
    }
    row.push(report.n_users_evaluated.to_string());
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_fit_eval(cfg: &ExperimentConfig) -> Result<()> {
    let started = unix_seconds();
    let dir = out_dir(cfg)?;
    let resolved = cfg.model.resolve()?;
    let phase = cfg.eval.phase()?;
    let split = obtain_split(cfg)?;
    let fit_matrix = fit_matrix_for(&split, phase);
    let fitted = fit_model(&resolved, &fit_matrix, &cfg.solver.solver_config())?;
    let mut report = evaluate_fitted(&fitted, &fit_matrix, &split, phase, &cfg.eval.cutoffs)?;
    for (k, v) in hyperparameters(&resolved) {
        report.metadata.hyperparameters.insert(k, v);
    }
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&report).expect("report is serializable"),
    )
    .context("writing report.json")?;
    write_report_csv(&dir.join("report.csv"), &report)?;
    let model_file = match fitted {
        FittedModel::Psge(m) => ModelFile::Psge(m),
        FittedModel::PureSvd(m) => ModelFile::PureSvd(m),
        FittedModel::Ease(m) => ModelFile::Ease(m),
    };
    save_model(&dir.join("model.psgm"), &model_file).context("writing model.psgm")?;
    for (&n, v) in &report.ndcg {
        println!(
            "{} {} ndcg@{n} = {:.6}, recall@{n} = {:.6}, avg_pop@{n} = {:.6}",
            report.metadata.model, report.metadata.phase, v, report.recall[&n],
            report.avg_popularity[&n]
        );
    }
    write_run_artifacts(cfg, &dir, "fit-eval", started)
}

#[derive(Clone, Serialize)]
struct GridRow {
    alpha: f64,
    beta: f64,
    f: usize,
    ndcg: f64,
    recall: f64,
    avg_popularity: f64,
}

/// One (α, β) grid cell: factorize once at the largest f, then evaluate
/// each smaller f by truncating the shared factors (leading singular
/// triplets nest).
fn grid_cell(
    split: &SplitDataset,
    alpha: f64,
    beta: f64,
    factors: &[usize],
    solver: &SolverConfig,
    cutoff: usize,
) -> Result<Vec<GridRow>> {
    let f_max = *factors.iter().max().expect("validated nonempty");
    let normalized = psge::sparse::normalize_interactions(&split.train, alpha, beta);
    let max_iter = solver.max_iter.unwrap_or(10 * f_max + 100);
    let outcome = truncated_svd(&normalized, f_max, solver.tol, max_iter, solver.seed)?;
    let deg = degrees(&split.train);
    let mut rows = Vec::with_capacity(factors.len());
    for &f in factors {
        let model = PsgeModel {
            factors: outcome.factors.truncate(f),
            alpha,
            beta,
            beta_tilde: beta,
            degrees: deg.clone(),
        };
        let report = evaluate(&model, &split.train, split, Phase::Validation, &[cutoff])?;
        rows.push(GridRow {
            alpha,
            beta,
            f,
            ndcg: report.ndcg[&cutoff],
            recall: report.recall[&cutoff],
            avg_popularity: report.avg_popularity[&cutoff],
        });
    }
    Ok(rows)
}

pub fn cmd_grid_search(cfg: &ExperimentConfig) -> Result<()> {
    let started = unix_seconds();
    let dir = out_dir(cfg)?;
    if cfg.model.kind != "psge" {
        bail!(
            "grid-search varies alpha and beta, which only psge exposes; got kind = {:?}",
            cfg.model.kind
        );
    }
    if cfg.grid.factors.is_empty() || cfg.grid.alphas.is_empty() || cfg.grid.betas.is_empty() {
        bail!("grid.alphas, grid.betas and grid.factors must be nonempty");
    }
    let split = obtain_split(cfg)?;
    let solver = cfg.solver.solver_config();
    let cutoff = cfg.grid.select_cutoff;
    let mut pairs = Vec::new();
    for &a in &cfg.grid.alphas {
        for &b in &cfg.grid.betas {
            pairs.push((a, b));
        }
    }
    info!(
        "grid: {} (alpha, beta) cells x {} ranks",
        pairs.len(),
        cfg.grid.factors.len()
    );
    let cell = |&(a, b): &(f64, f64)| grid_cell(&split, a, b, &cfg.grid.factors, &solver, cutoff);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Vec<GridRow>>> = pairs.par_iter().map(cell).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Vec<GridRow>>> = pairs.iter().map(cell).collect();

    let mut rows: Vec<GridRow> = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|x, y| {
        y.ndcg
            .total_cmp(&x.ndcg)
            .then(x.alpha.total_cmp(&y.alpha))
            .then(x.beta.total_cmp(&y.beta))
            .then(x.f.cmp(&y.f))
    });

    let lb_path = dir.join("leaderboard.csv");
    let mut w = csv::Writer::from_path(&lb_path)
        .with_context(|| format!("cannot create {}", lb_path.display()))?;
    w.write_record([
        "alpha",
        "beta",
        "f",
        &format!("ndcg@{cutoff}"),
        &format!("recall@{cutoff}"),
        &format!("avg_pop@{cutoff}"),
    ])?;
    for r in &rows {
        w.write_record([
            format!("{:.2}", r.alpha),
            format!("{:.2}", r.beta),
            r.f.to_string(),
            format!("{:.6}", r.ndcg),
            format!("{:.6}", r.recall),
            format!("{:.6}", r.avg_popularity),
        ])?;
    }
    w.flush()?;

    let best = &rows[0];
    std::fs::write(
        dir.join("best.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "alpha": best.alpha,
            "beta": best.beta,
            "f": best.f,
            "select_cutoff": cutoff,
            "ndcg": best.ndcg,
            "recall": best.recall,
            "avg_popularity": best.avg_popularity,
            "phase": "validation",
        }))
        .expect("flat json"),
    )
    .context("writing best.json")?;
    println!(
        "best: alpha = {:.2}, beta = {:.2}, f = {} (validation ndcg@{cutoff} = {:.6})",
        best.alpha, best.beta, best.f, best.ndcg
    );
    write_run_artifacts(cfg, &dir, "grid-search", started)
}

pub fn cmd_sweep_beta(cfg: &ExperimentConfig) -> Result<()> {
    let started = unix_seconds();
    let dir = out_dir(cfg)?;
    let resolved = cfg.model.resolve()?;
    if resolved.kind != ModelKind::Psge {
        bail!("sweep-beta re-scores a psge/sgmc factorization; got kind = {:?}", cfg.model.kind);
    }
    if cfg.sweep.beta_tilde.is_empty() {
        bail!("sweep.beta_tilde must be nonempty");
    }
    let phase = cfg.eval.phase()?;
    let split = obtain_split(cfg)?;
    let fit_matrix = fit_matrix_for(&split, phase);
    let FittedModel::Psge(mut model) =
        fit_model(&resolved, &fit_matrix, &cfg.solver.solver_config())?
    else {
        unreachable!("kind checked above");
    };
    let cutoff = cfg.sweep.cutoff;
    let mut grid = cfg.sweep.beta_tilde.clone();
    grid.sort_by(f64::total_cmp);

    let sweep_path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&sweep_path)
        .with_context(|| format!("cannot create {}", sweep_path.display()))?;
    w.write_record([
        "beta_tilde",
        &format!("ndcg@{cutoff}"),
        &format!("avg_pop@{cutoff}"),
    ])?;
    for &bt in &grid {
        model.set_beta_tilde(bt);
        let report = evaluate(&model, &fit_matrix, &split, phase, &[cutoff])?;
        w.write_record([
            format!("{:.2}", bt),
            format!("{:.6}", report.ndcg[&cutoff]),
            format!("{:.6}", report.avg_popularity[&cutoff]),
        ])?;
    }
    w.flush()?;
    println!("swept {} beta_tilde values -> {}", grid.len(), sweep_path.display());
    write_run_artifacts(cfg, &dir, "sweep-beta", started)
}

pub fn cmd_filter_curve(cfg: &ExperimentConfig) -> Result<()> {
    let started = unix_seconds();
    let dir = out_dir(cfg)?;
    if cfg.filter_curve.k_list.is_empty() || cfg.filter_curve.lambdas.is_empty() {
        bail!("filter_curve.k_list and filter_curve.lambdas must be nonempty");
    }
    let path = dir.join("filter_curve.csv");
    let mut w = csv::Writer::from_path(&path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["k", "lambda", "response"])?;
    for &k in &cfg.filter_curve.k_list {
        for &lambda in &cfg.filter_curve.lambdas {
            let g = filter_response(lambda, k)
                .with_context(|| format!("filter_response({lambda}, {k})"))?;
            w.write_record([k.to_string(), format!("{lambda:.4}"), format!("{g:.6}")])?;
        }
    }
    w.flush()?;
    println!(
        "filter curve: {} rows -> {}",
        cfg.filter_curve.k_list.len() * cfg.filter_curve.lambdas.len(),
        path.display()
    );
    write_run_artifacts(cfg, &dir, "filter-curve", started)
}
