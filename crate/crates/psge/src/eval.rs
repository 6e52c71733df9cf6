//! Top-N ranking metrics with training-item masking.
//!
//! The protocol: rank every unseen item per user, compare against that
//! user's held-out interactions, macro-average NDCG@n / Recall@n over users,
//! and report the average popularity of what was recommended. At validation
//! phase the model must have been fitted on the training matrix alone; at
//! test phase on train ∪ validation (those positives are masked out of the
//! candidate set either way).

use std::collections::BTreeMap;

use log::debug;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::{merge_train_val, SplitDataset};
use crate::models::{ModelError, Scorer};
use crate::sparse::{degrees, DegreeVectors, InteractionMatrix};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("model was not fitted on the {phase} training matrix (pattern differs)")]
    PhaseMismatch { phase: Phase },
    #[error("scorer covers {got_users}x{got_items}, split is {want_users}x{want_items}")]
    DimensionMismatch {
        got_users: usize,
        got_items: usize,
        want_users: usize,
        want_items: usize,
    },
    #[error("cutoffs must be nonempty and ≥ 1")]
    BadCutoffs,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which held-out set scores the model — and, implicitly, which matrix the
/// model must have been fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Validation,
    Test,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Validation => "validation",
            Phase::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalMetadata {
    pub seed: u64,
    pub model: String,
    pub phase: Phase,
    /// Free-form hyperparameter record (α, β, β̃, f, λ, ...), filled by the
    /// caller that knows them.
    pub hyperparameters: BTreeMap<String, f64>,
}

/// Macro-averaged ranking quality at each requested cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub ndcg: BTreeMap<usize, f64>,
    pub recall: BTreeMap<usize, f64>,
    /// Mean over recommended slots of `d_i / U` (training degree over user
    /// count), per cutoff. Lives in [0, 1]; higher = more mainstream.
    pub avg_popularity: BTreeMap<usize, f64>,
    /// Users contributing to the averages.
    pub n_users_evaluated: usize,
    /// Users skipped because they have no interactions in the fit matrix.
    pub n_users_cold: usize,
    pub metadata: EvalMetadata,
}

/// Ids of the top-n unmasked items by descending score, ties broken by
/// ascending item id. When fewer than n items are unmasked the list is
/// simply shorter (logged at debug level). `scores` and `mask` must be the
/// same length; scores must not be NaN.
pub fn rank_top_n(scores: &[f64], mask: &[bool], n: usize) -> Vec<usize> {
    assert_eq!(scores.len(), mask.len(), "one score and one flag per item");
    assert!(n >= 1, "cutoff must be at least 1");
    let mut candidates: Vec<usize> = (0..scores.len()).filter(|&i| !mask[i]).collect();
    if candidates.len() < n {
        debug!(
            "only {} unmasked items for a top-{n} request",
            candidates.len()
        );
    }
    let by_score_desc_then_id = |&a: &usize, &b: &usize| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| a.cmp(&b))
    };
    if candidates.len() > n {
        candidates.select_nth_unstable_by(n - 1, by_score_desc_then_id);
        candidates.truncate(n);
    }
    candidates.sort_unstable_by(by_score_desc_then_id);
    candidates
}

fn hit(relevant_sorted: &[usize], item: usize) -> bool {
    relevant_sorted.binary_search(&item).is_ok()
}

/// Binary-relevance NDCG: gain 1 at rank p contributes `1/log₂(p+1)`
/// (ranks start at 1), ideal DCG counts the first `min(n, |relevant|)`
/// ranks. 0 when `relevant` is empty. `relevant_sorted` is an ascending id
/// slice standing in for the relevant-item set.
pub fn ndcg_at(recommended: &[usize], relevant_sorted: &[usize], n: usize) -> f64 {
    if relevant_sorted.is_empty() {
        return 0.0;
    }
    let mut dcg = 0.0;
    for (pos, &item) in recommended.iter().take(n).enumerate() {
        if hit(relevant_sorted, item) {
            dcg += 1.0 / ((pos + 2) as f64).log2();
        }
    }
    let ideal_hits = n.min(relevant_sorted.len());
    let idcg: f64 = (0..ideal_hits).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
    dcg / idcg
}

/// Fraction of the relevant set retrieved in the top n. 0 when `relevant`
/// is empty.
pub fn recall_at(recommended: &[usize], relevant_sorted: &[usize], n: usize) -> f64 {
    if relevant_sorted.is_empty() {
        return 0.0;
    }
    let hits = recommended
        .iter()
        .take(n)
        .filter(|&&i| hit(relevant_sorted, i))
        .count();
    hits as f64 / relevant_sorted.len() as f64
}

/// Mean of `d_i / n_users_total` over every recommended slot, `d_i` being
/// the training item degree. 0 when nothing was recommended.
pub fn avg_recommendation_popularity(
    recommendations: &[Vec<usize>],
    degrees: &DegreeVectors,
    n_users_total: usize,
) -> f64 {
    let slots: usize = recommendations.iter().map(Vec::len).sum();
    if slots == 0 || n_users_total == 0 {
        return 0.0;
    }
    let degree_sum: f64 = recommendations
        .iter()
        .flatten()
        .map(|&i| degrees.item_degrees[i])
        .sum();
    degree_sum / (slots as f64 * n_users_total as f64)
}

struct UserOutcome {
    ndcg: Vec<f64>,
    recall: Vec<f64>,
    degree_sum: Vec<f64>,
    slots: Vec<usize>,
}

enum UserStatus {
    Evaluated(Box<UserOutcome>),
    Cold,
    NoRelevant,
}

/// Scores every user of `scorer` against the phase's held-out set.
///
/// `fit_matrix` is the matrix the model was actually fitted on; its nonzero
/// pattern must equal the phase-appropriate training matrix (train for
/// validation, train ∪ validation for test), and its positives are masked
/// from the candidate set. Users without fit interactions are skipped and
/// counted; users with an empty held-out set are excluded from the
/// averages. Per-user work runs in parallel, reduced in user-id order, so
/// the averages are bit-deterministic.
pub fn evaluate<S: Scorer + ?Sized>(
    scorer: &S,
    fit_matrix: &InteractionMatrix,
    split: &SplitDataset,
    phase: Phase,
    cutoffs: &[usize],
) -> Result<EvalReport, EvalError> {
    if cutoffs.is_empty() || cutoffs.iter().any(|&n| n == 0) {
        return Err(EvalError::BadCutoffs);
    }
    let (n_users, n_items) = (split.train.n_users(), split.train.n_items());
    if scorer.n_users() != n_users || scorer.n_items() != n_items {
        return Err(EvalError::DimensionMismatch {
            got_users: scorer.n_users(),
            got_items: scorer.n_items(),
            want_users: n_users,
            want_items: n_items,
        });
    }
    let expected_fit = match phase {
        Phase::Validation => split.train.clone(),
        Phase::Test => merge_train_val(split),
    };
    if fit_matrix.row_ptr() != expected_fit.row_ptr()
        || fit_matrix.col_idx() != expected_fit.col_idx()
    {
        return Err(EvalError::PhaseMismatch { phase });
    }
    let held_out = match phase {
        Phase::Validation => &split.validation,
        Phase::Test => &split.test,
    };
    let deg = degrees(fit_matrix);
    let n_max = cutoffs.iter().copied().max().unwrap();

    let eval_user = |u: usize| -> Result<UserStatus, EvalError> {
        let (fit_cols, _) = fit_matrix.row(u);
        if fit_cols.is_empty() {
            return Ok(UserStatus::Cold);
        }
        let (relevant, _) = held_out.row(u);
        if relevant.is_empty() {
            return Ok(UserStatus::NoRelevant);
        }
        let scores = scorer.score_user(u)?;
        let mut mask = vec![false; n_items];
        for &i in fit_cols {
            mask[i] = true;
        }
        let ranked = rank_top_n(&scores, &mask, n_max);
        let mut out = UserOutcome {
            ndcg: Vec::with_capacity(cutoffs.len()),
            recall: Vec::with_capacity(cutoffs.len()),
            degree_sum: Vec::with_capacity(cutoffs.len()),
            slots: Vec::with_capacity(cutoffs.len()),
        };
        for &n in cutoffs {
            out.ndcg.push(ndcg_at(&ranked, relevant, n));
            out.recall.push(recall_at(&ranked, relevant, n));
            let prefix = &ranked[..n.min(ranked.len())];
            out.degree_sum
                .push(prefix.iter().map(|&i| deg.item_degrees[i]).sum());
            out.slots.push(prefix.len());
        }
        Ok(UserStatus::Evaluated(Box::new(out)))
    };

    #[cfg(feature = "parallel")]
    let per_user: Vec<Result<UserStatus, EvalError>> =
        (0..n_users).into_par_iter().map(eval_user).collect();
    #[cfg(not(feature = "parallel"))]
    let per_user: Vec<Result<UserStatus, EvalError>> = (0..n_users).map(eval_user).collect();

    let mut ndcg_sum = vec![0.0f64; cutoffs.len()];
    let mut recall_sum = vec![0.0f64; cutoffs.len()];
    let mut degree_sum = vec![0.0f64; cutoffs.len()];
    let mut slot_sum = vec![0usize; cutoffs.len()];
    let mut n_eval = 0usize;
    let mut n_cold = 0usize;
    for status in per_user {
        match status? {
            UserStatus::Evaluated(out) => {
                n_eval += 1;
                for c in 0..cutoffs.len() {
                    ndcg_sum[c] += out.ndcg[c];
                    recall_sum[c] += out.recall[c];
                    degree_sum[c] += out.degree_sum[c];
                    slot_sum[c] += out.slots[c];
                }
            }
            UserStatus::Cold => n_cold += 1,
            UserStatus::NoRelevant => {}
        }
    }

    let mut ndcg = BTreeMap::new();
    let mut recall = BTreeMap::new();
    let mut avg_popularity = BTreeMap::new();
    for (c, &n) in cutoffs.iter().enumerate() {
        let denom = n_eval.max(1) as f64;
        ndcg.insert(n, ndcg_sum[c] / denom);
        recall.insert(n, recall_sum[c] / denom);
        let pop = if slot_sum[c] == 0 {
            0.0
        } else {
            degree_sum[c] / (slot_sum[c] as f64 * n_users as f64)
        };
        avg_popularity.insert(n, pop);
    }
    Ok(EvalReport {
        ndcg,
        recall,
        avg_popularity,
        n_users_evaluated: n_eval,
        n_users_cold: n_cold,
        metadata: EvalMetadata {
            seed: split.seed,
            model: scorer.tag().to_owned(),
            phase,
            hyperparameters: BTreeMap::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{split_per_user, IndexMap, RawInteractions, RawRecord};
    use crate::models::{fit_psge, SolverConfig};
    use crate::util::unit_f64;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;
    use std::collections::HashSet;

    /// Scorer with a fixed dense score table.
    struct TableScorer {
        table: Vec<Vec<f64>>,
        n_items: usize,
    }

    impl Scorer for TableScorer {
        fn n_users(&self) -> usize {
            self.table.len()
        }
        fn n_items(&self) -> usize {
            self.n_items
        }
        fn score_user(&self, user: usize) -> Result<Vec<f64>, ModelError> {
            Ok(self.table[user].clone())
        }
        fn tag(&self) -> &'static str {
            "table"
        }
    }

    fn toy_split(n_users: usize, n_items: usize, seed: u64) -> SplitDataset {
        let mut records = Vec::new();
        for u in 0..n_users {
            let len = 10 + (u * 3) % 5;
            for t in 0..len {
                let i = (u * 7 + t) % n_items;
                records.push(RawRecord {
                    user: format!("u{u:03}"),
                    item: format!("i{i:03}"),
                    weight: 1.0,
                    timestamp: None,
                });
            }
        }
        let mut seen = HashSet::new();
        records.retain(|r| seen.insert((r.user.clone(), r.item.clone())));
        split_per_user(&RawInteractions { records }, (0.8, 0.1, 0.1), seed).unwrap()
    }

    #[test]
    fn rank_excludes_masked_and_sorts_by_score() {
        let ranked = rank_top_n(&[0.1, 0.9, 0.5], &[false, true, false], 2);
        assert_eq!(ranked, vec![2, 0]);
    }

    #[test]
    fn rank_breaks_ties_by_ascending_id() {
        let ranked = rank_top_n(&[1.0; 5], &[false; 5], 3);
        assert_eq!(ranked, vec![0, 1, 2]);
    }

    #[test]
    fn rank_returns_short_list_when_candidates_run_out() {
        let ranked = rank_top_n(&[0.3, 0.2, 0.1], &[false, true, true], 3);
        assert_eq!(ranked, vec![0]);
    }

    #[test]
    fn rank_matches_full_sort_oracle_on_model_scores() {
        let split = toy_split(20, 30, 5);
        let model = fit_psge(
            &split.train,
            0.5,
            0.5,
            8,
            &SolverConfig {
                tol: 1e-9,
                max_iter: Some(400),
                seed: 1,
            },
        )
        .unwrap();
        for u in 0..20 {
            let scores = match model.score_user(u) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let mut mask = vec![false; 30];
            for &i in split.train.row(u).0 {
                mask[i] = true;
            }
            let fast = rank_top_n(&scores, &mask, 10);
            let mut oracle: Vec<usize> = (0..30).filter(|&i| !mask[i]).collect();
            oracle.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            oracle.truncate(10);
            assert_eq!(fast, oracle, "user {u}");
        }
    }

    #[test]
    fn ndcg_perfect_ranking_is_one() {
        assert!((ndcg_at(&[3, 1, 2], &[1, 2, 3], 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ndcg_single_hit_at_rank_two() {
        // DCG = 1/log₂(3), IDCG = 1 → 0.63093.
        let v = ndcg_at(&[9, 4, 7], &[4], 5);
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-9);
        assert!((v - 0.63093).abs() < 1e-5);
    }

    #[test]
    fn ndcg_no_hits_is_zero_and_empty_relevant_is_zero() {
        assert_eq!(ndcg_at(&[1, 2], &[5, 6], 2), 0.0);
        assert_eq!(ndcg_at(&[1, 2], &[], 2), 0.0);
    }

    #[test]
    fn recall_counts_hits_over_relevant() {
        assert_eq!(recall_at(&[1, 2, 3], &[1, 2, 3], 3), 1.0);
        assert_eq!(recall_at(&[1, 9, 8], &[1, 2, 3, 4], 3), 0.25);
        assert_eq!(recall_at(&[7], &[], 1), 0.0);
    }

    #[test]
    fn metrics_monotone_in_cutoff() {
        let recommended = [4, 9, 1, 7, 3, 0, 8];
        let relevant = [1, 3, 9];
        for n in 1..recommended.len() {
            assert!(
                recall_at(&recommended, &relevant, n) <= recall_at(&recommended, &relevant, n + 1)
            );
            assert!(
                ndcg_at(&recommended, &relevant, n) <= ndcg_at(&recommended, &relevant, n + 1) + 1e-12
            );
        }
    }

    #[test]
    fn popularity_of_most_popular_item_only() {
        let m = InteractionMatrix::from_pairs(
            4,
            3,
            &[(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (2, 2)],
        )
        .unwrap();
        let deg = degrees(&m);
        let recs = vec![vec![0], vec![0], vec![0], vec![0]];
        let pop = avg_recommendation_popularity(&recs, &deg, 4);
        assert!((pop - 1.0).abs() < 1e-12, "item 0 has degree 4 of 4 users");
        let zero = avg_recommendation_popularity(&vec![vec![]; 4], &deg, 4);
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn popularity_matches_brute_force_mean() {
        let m = InteractionMatrix::from_pairs(
            5,
            4,
            &[(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 2), (3, 3), (4, 3)],
        )
        .unwrap();
        let deg = degrees(&m);
        let recs = vec![vec![0, 1], vec![2], vec![3, 1, 0]];
        let mut expect = 0.0;
        let mut slots = 0;
        for list in &recs {
            for &i in list {
                expect += deg.item_degrees[i] / 5.0;
                slots += 1;
            }
        }
        expect /= slots as f64;
        let got = avg_recommendation_popularity(&recs, &deg, 5);
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn oracle_scorer_achieves_perfect_metrics() {
        let split = toy_split(15, 25, 9);
        let mut table = vec![vec![0.0; 25]; 15];
        for u in 0..15 {
            for &i in split.validation.row(u).0 {
                table[u][i] = 1e9;
            }
        }
        let scorer = TableScorer { table, n_items: 25 };
        let report = evaluate(&scorer, &split.train, &split, Phase::Validation, &[5, 20]).unwrap();
        for (&_n, &v) in &report.ndcg {
            assert!((v - 1.0).abs() < 1e-12, "ndcg {v}");
        }
        for (&_n, &v) in &report.recall {
            assert!((v - 1.0).abs() < 1e-12, "recall {v}");
        }
        assert!(report.n_users_evaluated > 0);
    }

    #[test]
    fn random_scorer_recall_matches_hypergeometric_mean() {
        // 200 users, 400 items, 10 train + 10 test each: a random ranking
        // retrieves about n/(I - masked) of the held-out set.
        let n_users = 200;
        let n_items = 400;
        let mut train_pairs = Vec::new();
        let mut test_pairs = Vec::new();
        for u in 0..n_users {
            for t in 0..10 {
                train_pairs.push((u, (u * 13 + t) % n_items));
                test_pairs.push((u, (u * 13 + 150 + t * 7) % n_items));
            }
        }
        let train_set: HashSet<(usize, usize)> = train_pairs.iter().copied().collect();
        test_pairs.retain(|p| !train_set.contains(p));
        let train = InteractionMatrix::from_pairs(n_users, n_items, &train_pairs).unwrap();
        let test = InteractionMatrix::from_pairs(n_users, n_items, &test_pairs).unwrap();
        let user_index =
            IndexMap::from_tokens((0..n_users).map(|u| format!("u{u:04}")).collect());
        let item_index =
            IndexMap::from_tokens((0..n_items).map(|i| format!("i{i:04}")).collect());
        let split = SplitDataset {
            validation: InteractionMatrix::from_pairs(n_users, n_items, &[]).unwrap(),
            train: train.clone(),
            test,
            user_index,
            item_index,
            seed: 0,
        };
        let fit = merge_train_val(&split);
        let mut table = Vec::with_capacity(n_users);
        for u in 0..n_users {
            let mut rng = ChaCha8Rng::seed_from_u64(u as u64);
            table.push((0..n_items).map(|_| unit_f64(&mut rng)).collect());
        }
        let scorer = TableScorer {
            table,
            n_items,
        };
        let n = 20;
        let report = evaluate(&scorer, &fit, &split, Phase::Test, &[n]).unwrap();
        let expected = n as f64 / (n_items - 10) as f64;
        let got = report.recall[&n];
        // 3σ of the mean over 200 users is ≈ 0.015 for this geometry.
        assert!(
            (got - expected).abs() < 0.015,
            "recall {got} too far from hypergeometric mean {expected}"
        );
    }

    #[test]
    fn evaluate_rejects_wrong_fit_matrix() {
        let split = toy_split(12, 20, 3);
        let scorer = TableScorer {
            table: vec![vec![0.5; 20]; 12],
            n_items: 20,
        };
        // Validation phase but fitted on train ∪ val.
        let merged = merge_train_val(&split);
        assert!(matches!(
            evaluate(&scorer, &merged, &split, Phase::Validation, &[5]),
            Err(EvalError::PhaseMismatch { .. })
        ));
        // Test phase but fitted on train only.
        assert!(matches!(
            evaluate(&scorer, &split.train, &split, Phase::Test, &[5]),
            Err(EvalError::PhaseMismatch { .. })
        ));
        // Correct pairings pass.
        assert!(evaluate(&scorer, &split.train, &split, Phase::Validation, &[5]).is_ok());
        assert!(evaluate(&scorer, &merged, &split, Phase::Test, &[5]).is_ok());
    }

    #[test]
    fn evaluate_rejects_bad_cutoffs_and_dimensions() {
        let split = toy_split(8, 20, 1);
        let good = TableScorer {
            table: vec![vec![0.0; 20]; 8],
            n_items: 20,
        };
        assert!(matches!(
            evaluate(&good, &split.train, &split, Phase::Validation, &[]),
            Err(EvalError::BadCutoffs)
        ));
        assert!(matches!(
            evaluate(&good, &split.train, &split, Phase::Validation, &[5, 0]),
            Err(EvalError::BadCutoffs)
        ));
        let wrong = TableScorer {
            table: vec![vec![0.0; 19]; 8],
            n_items: 19,
        };
        assert!(matches!(
            evaluate(&wrong, &split.train, &split, Phase::Validation, &[5]),
            Err(EvalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn metrics_invariant_under_monotone_score_transform() {
        let split = toy_split(18, 24, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base: Vec<Vec<f64>> = (0..18)
            .map(|_| (0..24).map(|_| unit_f64(&mut rng)).collect())
            .collect();
        let transformed: Vec<Vec<f64>> = base
            .iter()
            .map(|row| row.iter().map(|&s| (4.0 * s).exp() + 7.0).collect())
            .collect();
        let a = evaluate(
            &TableScorer {
                table: base,
                n_items: 24,
            },
            &split.train,
            &split,
            Phase::Validation,
            &[3, 10],
        )
        .unwrap();
        let b = evaluate(
            &TableScorer {
                table: transformed,
                n_items: 24,
            },
            &split.train,
            &split,
            Phase::Validation,
            &[3, 10],
        )
        .unwrap();
        assert_eq!(a.ndcg, b.ndcg);
        assert_eq!(a.recall, b.recall);
        assert_eq!(a.avg_popularity, b.avg_popularity);
    }

    #[test]
    fn masked_items_never_recommended() {
        let split = toy_split(16, 22, 11);
        // Constant scores: ranker falls back to ascending id among unmasked.
        for u in 0..16 {
            let mut mask = vec![false; 22];
            for &i in split.train.row(u).0 {
                mask[i] = true;
            }
            let ranked = rank_top_n(&vec![1.0; 22], &mask, 22);
            assert!(ranked.iter().all(|&i| !mask[i]));
            let expected: Vec<usize> = (0..22).filter(|&i| !mask[i]).collect();
            assert_eq!(ranked, expected);
        }
    }

    #[test]
    fn evaluate_is_deterministic() {
        let split = toy_split(20, 26, 13);
        let model = fit_psge(&split.train, 0.4, 0.6, 6, &SolverConfig::default()).unwrap();
        let a = evaluate(&model, &split.train, &split, Phase::Validation, &[5, 20]).unwrap();
        let b = evaluate(&model, &split.train, &split, Phase::Validation, &[5, 20]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.metadata.model, "psge");
        assert_eq!(a.metadata.seed, split.seed);
    }

    #[test]
    fn report_serializes_to_json() {
        let split = toy_split(10, 20, 2);
        let scorer = TableScorer {
            table: vec![vec![0.25; 20]; 10],
            n_items: 20,
        };
        let mut report =
            evaluate(&scorer, &split.train, &split, Phase::Validation, &[5]).unwrap();
        report
            .metadata
            .hyperparameters
            .insert("alpha".into(), 0.5);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"ndcg\""));
        assert!(json.contains("\"alpha\":0.5"));
        assert!(json.contains("\"phase\":\"validation\""));
    }
}
