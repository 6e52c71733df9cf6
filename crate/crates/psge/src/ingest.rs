//! Dataset plumbing: delimited-log parsing, k-core pruning, and seeded
//! per-user train/validation/test splitting.
//!
//! Interactions are binarized on the way in — every surviving (user, item)
//! pair enters the matrices with weight 1 — and the split for each user is
//! keyed by the user's *token*, not their row index, so adding or removing
//! one user never perturbs anyone else's split.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::{InteractionMatrix, SparseError};
use crate::util::{fnv1a64, uniform_usize};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("split ratios must be positive and sum to 1, got ({train}, {validation}, {test})")]
    BadRatios {
        train: f64,
        validation: f64,
        test: f64,
    },
    #[error("token {token:?} contains tab or newline and cannot be persisted")]
    BadToken { token: String },
    #[error("split directory is inconsistent: {reason}")]
    CorruptSplit { reason: String },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Shape of a delimited interaction log. The delimiter is a string, not a
/// byte, because MovieLens-style files separate fields with `::`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSpec {
    pub delimiter: String,
    pub has_header: bool,
    pub user_col: usize,
    pub item_col: usize,
    /// Column holding an explicit weight/rating; absent means weight 1.
    pub weight_col: Option<usize>,
    /// Column holding an integer timestamp used only for deduplication.
    pub timestamp_col: Option<usize>,
    /// Drop records with weight below this, applied after deduplication so
    /// the user's latest rating decides whether the pair survives.
    pub min_rating: Option<f64>,
}

impl Default for CsvSpec {
    fn default() -> Self {
        Self {
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

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub user: String,
    pub item: String,
    pub weight: f64,
    pub timestamp: Option<i64>,
}

/// Parsed interaction log, deduplicated: one record per (user, item) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawInteractions {
    pub records: Vec<RawRecord>,
}

impl RawInteractions {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Parses a delimited interaction log. Duplicate (user, item) pairs are
/// collapsed keeping the record with the latest timestamp (first occurrence
/// wins when timestamps are absent or tied); `min_rating`, if set, is applied
/// to the surviving record's weight.
pub fn load_triplets(path: &Path, format: &CsvSpec) -> Result<RawInteractions, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    let needed = [
        Some(format.user_col),
        Some(format.item_col),
        format.weight_col,
        format.timestamp_col,
    ]
    .into_iter()
    .flatten()
    .max()
    .unwrap();

    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut records: Vec<RawRecord> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        if format.has_header && line_no == 1 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(format.delimiter.as_str()).collect();
        if fields.len() <= needed {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!(
                    "expected at least {} fields separated by {:?}, found {}",
                    needed + 1,
                    format.delimiter,
                    fields.len()
                ),
            });
        }
        let weight = match format.weight_col {
            Some(c) => {
                let w: f64 = fields[c].trim().parse().map_err(|_| IngestError::MalformedRow {
                    line: line_no,
                    reason: format!("weight field {:?} is not a number", fields[c]),
                })?;
                if !w.is_finite() || w < 0.0 {
                    return Err(IngestError::MalformedRow {
                        line: line_no,
                        reason: format!("weight {w} is negative or not finite"),
                    });
                }
                w
            }
            None => 1.0,
        };
        let timestamp = match format.timestamp_col {
            Some(c) => Some(fields[c].trim().parse::<i64>().map_err(|_| {
                IngestError::MalformedRow {
                    line: line_no,
                    reason: format!("timestamp field {:?} is not an integer", fields[c]),
                }
            })?),
            None => None,
        };
        let rec = RawRecord {
            user: fields[format.user_col].trim().to_owned(),
            item: fields[format.item_col].trim().to_owned(),
            weight,
            timestamp,
        };
        match index.entry((rec.user.clone(), rec.item.clone())) {
            Entry::Occupied(slot) => {
                let kept = &mut records[*slot.get()];
                // Option<i64> ordering puts None below every Some, so a
                // timestamped record always supersedes an untimestamped one.
                if rec.timestamp > kept.timestamp {
                    *kept = rec;
                }
            }
            Entry::Vacant(slot) => {
                slot.insert(records.len());
                records.push(rec);
            }
        }
    }
    if let Some(threshold) = format.min_rating {
        records.retain(|r| r.weight >= threshold);
    }
    info!(
        "loaded {} deduplicated interactions from {}",
        records.len(),
        path.display()
    );
    Ok(RawInteractions { records })
}

/// Maximal subgraph in which every user and every item has degree ≥ k,
/// reached by alternately dropping under-degree users and items until a
/// fixed point. `k ≤ 1` is the identity on deduplicated input. An empty
/// result is returned as such, with a warning.
pub fn k_core_filter(raw: &RawInteractions, k: usize) -> RawInteractions {
    let mut alive = vec![true; raw.records.len()];
    loop {
        let dropped_users = prune_side(&raw.records, &mut alive, k, |r| r.user.as_str());
        let dropped_items = prune_side(&raw.records, &mut alive, k, |r| r.item.as_str());
        if dropped_users == 0 && dropped_items == 0 {
            break;
        }
    }
    let records: Vec<RawRecord> = raw
        .records
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(r, _)| r.clone())
        .collect();
    if records.is_empty() && !raw.is_empty() {
        warn!("k-core filter with k={k} removed every interaction");
    }
    RawInteractions { records }
}

/// Drops every record whose key (user or item token) currently has degree
/// < k; returns how many records were dropped.
fn prune_side<'a>(
    records: &'a [RawRecord],
    alive: &mut [bool],
    k: usize,
    key: impl Fn(&'a RawRecord) -> &'a str,
) -> usize {
    let mut deg: HashMap<&str, usize> = HashMap::new();
    for (r, &a) in records.iter().zip(alive.iter()) {
        if a {
            *deg.entry(key(r)).or_insert(0) += 1;
        }
    }
    let mut dropped = 0;
    for (r, a) in records.iter().zip(alive.iter_mut()) {
        if *a && deg[key(r)] < k {
            *a = false;
            dropped += 1;
        }
    }
    dropped
}

/// Bidirectional token ↔ id map; ids are assigned in lexicographic token
/// order, so the mapping is a pure function of the token set.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    tokens: Vec<String>,
    by_token: HashMap<String, usize>,
}

impl IndexMap {
    /// Builds the map from any token collection; duplicates collapse and
    /// ids follow sorted order.
    pub fn from_tokens(mut tokens: Vec<String>) -> Self {
        tokens.sort_unstable();
        tokens.dedup();
        let by_token = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, by_token }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.by_token.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Train/validation/test matrices over a shared id space, plus the token
/// maps and the seed that produced the split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: InteractionMatrix,
    pub validation: InteractionMatrix,
    pub test: InteractionMatrix,
    pub user_index: IndexMap,
    pub item_index: IndexMap,
    pub seed: u64,
}

/// Shuffles each user's interactions with a generator keyed by the user's
/// token and the global seed, then holds out `floor(r_val·n)` and
/// `floor(r_test·n)` interactions; the remainder trains. Floor rounding
/// means a user always keeps at least one training interaction.
pub fn split_per_user(
    raw: &RawInteractions,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitDataset, IngestError> {
    let (r_train, r_val, r_test) = ratios;
    let bad = |r: f64| !(r > 0.0) || !r.is_finite();
    if bad(r_train) || bad(r_val) || bad(r_test) || (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(IngestError::BadRatios {
            train: r_train,
            validation: r_val,
            test: r_test,
        });
    }
    let user_index = IndexMap::from_tokens(raw.records.iter().map(|r| r.user.clone()).collect());
    let item_index = IndexMap::from_tokens(raw.records.iter().map(|r| r.item.clone()).collect());
    let n_users = user_index.len();
    let n_items = item_index.len();

    let mut profiles: Vec<Vec<usize>> = vec![Vec::new(); n_users];
    for r in &raw.records {
        let u = user_index.id(&r.user).unwrap();
        let i = item_index.id(&r.item).unwrap();
        profiles[u].push(i);
    }

    let mut train_pairs = Vec::new();
    let mut val_pairs = Vec::new();
    let mut test_pairs = Vec::new();
    for (u, items) in profiles.iter_mut().enumerate() {
        // Canonical pre-shuffle order, so the outcome depends only on the
        // item id set and the user's random stream.
        items.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(
            fnv1a64(user_index.token(u).as_bytes()) ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        for j in (1..items.len()).rev() {
            items.swap(j, uniform_usize(&mut rng, j + 1));
        }
        let n = items.len();
        // The tiny offset keeps floor() on the exact-rational side of ties
        // (0.3 · 10 is 2.9999… in floats but 3 in arithmetic).
        let n_test = (r_test * n as f64 + 1e-9).floor() as usize;
        let n_val = (r_val * n as f64 + 1e-9).floor() as usize;
        let n_train = n - n_val - n_test;
        for (pos, &i) in items.iter().enumerate() {
            let pair = (u, i);
            if pos < n_train {
                train_pairs.push(pair);
            } else if pos < n_train + n_val {
                val_pairs.push(pair);
            } else {
                test_pairs.push(pair);
            }
        }
    }
    Ok(SplitDataset {
        train: InteractionMatrix::from_pairs(n_users, n_items, &train_pairs)?,
        validation: InteractionMatrix::from_pairs(n_users, n_items, &val_pairs)?,
        test: InteractionMatrix::from_pairs(n_users, n_items, &test_pairs)?,
        user_index,
        item_index,
        seed,
    })
}

/// Union of the train and validation nonzeros — the matrix models are
/// refitted on before test-phase evaluation. Patterns are disjoint by the
/// split invariant; entries keep their training weight.
pub fn merge_train_val(ds: &SplitDataset) -> InteractionMatrix {
    let (n_users, n_items) = (ds.train.n_users(), ds.train.n_items());
    let mut row_ptr = Vec::with_capacity(n_users + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::with_capacity(ds.train.nnz() + ds.validation.nnz());
    let mut values = Vec::with_capacity(col_idx.capacity());
    for u in 0..n_users {
        let (tc, tv) = ds.train.row(u);
        let (vc, vv) = ds.validation.row(u);
        let (mut a, mut b) = (0, 0);
        while a < tc.len() || b < vc.len() {
            let take_train = b >= vc.len() || (a < tc.len() && tc[a] < vc[b]);
            if take_train {
                col_idx.push(tc[a]);
                values.push(tv[a]);
                a += 1;
            } else {
                debug_assert!(a >= tc.len() || tc[a] != vc[b], "split patterns overlap");
                col_idx.push(vc[b]);
                values.push(vv[b]);
                b += 1;
            }
        }
        row_ptr.push(col_idx.len());
    }
    InteractionMatrix::new(n_users, n_items, row_ptr, col_idx, values)
        .expect("merging two valid disjoint matrices preserves validity")
}

/// Counts persisted alongside a split so a reload can be sanity-checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetadata {
    pub seed: u64,
    pub k_core: Option<usize>,
    pub n_users: usize,
    pub n_items: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
}

const SPLIT_FILES: [&str; 3] = ["train.tsv", "validation.tsv", "test.tsv"];

/// Writes a split as three `user_id<TAB>item_id` files plus an index-map
/// file and a JSON metadata file — a stable, diff-friendly layout.
pub fn save_split(ds: &SplitDataset, k_core: Option<usize>, dir: &Path) -> Result<(), IngestError> {
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source: std::io::Error| IngestError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, m) in SPLIT_FILES
        .iter()
        .zip([&ds.train, &ds.validation, &ds.test])
    {
        let mut out = String::new();
        for u in 0..m.n_users() {
            for &i in m.row(u).0 {
                let _ = writeln!(out, "{u}\t{i}");
            }
        }
        let path = dir.join(name);
        std::fs::write(&path, out).map_err(io_err(&path))?;
    }
    let mut map = String::new();
    for (kind, idx) in [("u", &ds.user_index), ("i", &ds.item_index)] {
        for (id, token) in idx.tokens().iter().enumerate() {
            if token.contains(['\t', '\n', '\r']) {
                return Err(IngestError::BadToken {
                    token: token.clone(),
                });
            }
            let _ = writeln!(map, "{kind}\t{id}\t{token}");
        }
    }
    let map_path = dir.join("index_map.tsv");
    std::fs::write(&map_path, map).map_err(io_err(&map_path))?;
    let meta = SplitMetadata {
        seed: ds.seed,
        k_core,
        n_users: ds.user_index.len(),
        n_items: ds.item_index.len(),
        n_train: ds.train.nnz(),
        n_validation: ds.validation.nnz(),
        n_test: ds.test.nnz(),
    };
    let meta_path = dir.join("metadata.json");
    std::fs::write(
        &meta_path,
        serde_json::to_string_pretty(&meta).expect("metadata is a flat struct"),
    )
    .map_err(io_err(&meta_path))?;
    Ok(())
}

/// Reads back a directory written by [`save_split`], verifying the counts
/// recorded in its metadata.
pub fn load_split(dir: &Path) -> Result<(SplitDataset, SplitMetadata), IngestError> {
    let read = |name: &str| -> Result<String, IngestError> {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|source| IngestError::Io { path, source })
    };
    let meta: SplitMetadata =
        serde_json::from_str(&read("metadata.json")?).map_err(|e| IngestError::CorruptSplit {
            reason: format!("metadata.json does not parse: {e}"),
        })?;

    let mut user_tokens: Vec<(usize, String)> = Vec::new();
    let mut item_tokens: Vec<(usize, String)> = Vec::new();
    for (line_no, line) in read("index_map.tsv")?.lines().enumerate() {
        let mut parts = line.splitn(3, '\t');
        let (kind, id, token) = (parts.next(), parts.next(), parts.next());
        let (Some(kind), Some(id), Some(token)) = (kind, id, token) else {
            return Err(IngestError::CorruptSplit {
                reason: format!("index_map.tsv line {}: expected kind\\tid\\ttoken", line_no + 1),
            });
        };
        let id: usize = id.parse().map_err(|_| IngestError::CorruptSplit {
            reason: format!("index_map.tsv line {}: bad id {id:?}", line_no + 1),
        })?;
        match kind {
            "u" => user_tokens.push((id, token.to_owned())),
            "i" => item_tokens.push((id, token.to_owned())),
            other => {
                return Err(IngestError::CorruptSplit {
                    reason: format!("index_map.tsv line {}: unknown kind {other:?}", line_no + 1),
                })
            }
        }
    }
    let build_index = |mut rows: Vec<(usize, String)>, expect: usize, side: &str| {
        rows.sort_unstable();
        if rows.len() != expect || rows.iter().enumerate().any(|(i, (id, _))| i != *id) {
            return Err(IngestError::CorruptSplit {
                reason: format!("{side} ids are not a complete 0..{expect} range"),
            });
        }
        Ok(IndexMap::from_tokens(rows.into_iter().map(|(_, t)| t).collect()))
    };
    let user_index = build_index(user_tokens, meta.n_users, "user")?;
    let item_index = build_index(item_tokens, meta.n_items, "item")?;

    let mut matrices = Vec::with_capacity(3);
    for (name, expect) in SPLIT_FILES
        .iter()
        .zip([meta.n_train, meta.n_validation, meta.n_test])
    {
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(expect);
        for (line_no, line) in read(name)?.lines().enumerate() {
            let mut parts = line.splitn(2, '\t');
            let pair = parts
                .next()
                .zip(parts.next())
                .and_then(|(u, i)| Some((u.parse().ok()?, i.parse().ok()?)));
            match pair {
                Some(p) => pairs.push(p),
                None => {
                    return Err(IngestError::CorruptSplit {
                        reason: format!("{name} line {}: expected user\\titem", line_no + 1),
                    })
                }
            }
        }
        if pairs.len() != expect {
            return Err(IngestError::CorruptSplit {
                reason: format!("{name} holds {} pairs, metadata says {expect}", pairs.len()),
            });
        }
        matrices.push(InteractionMatrix::from_pairs(
            meta.n_users,
            meta.n_items,
            &pairs,
        )?);
    }
    let test = matrices.pop().unwrap();
    let validation = matrices.pop().unwrap();
    let train = matrices.pop().unwrap();
    Ok((
        SplitDataset {
            train,
            validation,
            test,
            user_index,
            item_index,
            seed: meta.seed,
        },
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;
    use std::io::Write as _;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn raw_from_pairs(pairs: &[(&str, &str)]) -> RawInteractions {
        RawInteractions {
            records: pairs
                .iter()
                .map(|&(u, i)| RawRecord {
                    user: u.to_owned(),
                    item: i.to_owned(),
                    weight: 1.0,
                    timestamp: None,
                })
                .collect(),
        }
    }

    fn pair_set(raw: &RawInteractions) -> HashSet<(String, String)> {
        raw.records
            .iter()
            .map(|r| (r.user.clone(), r.item.clone()))
            .collect()
    }

    fn matrix_pairs(m: &InteractionMatrix) -> HashSet<(usize, usize)> {
        let mut out = HashSet::new();
        for u in 0..m.n_users() {
            for &i in m.row(u).0 {
                out.insert((u, i));
            }
        }
        out
    }

    #[test]
    fn dedup_without_timestamps_keeps_first() {
        let f = write_temp("u1,i1,5\nu1,i1,3\n");
        let spec = CsvSpec {
            weight_col: Some(2),
            ..CsvSpec::default()
        };
        let raw = load_triplets(f.path(), &spec).unwrap();
        assert_eq!(raw.len(), 1);
        assert_eq!(raw.records[0].weight, 5.0);
    }

    #[test]
    fn dedup_with_timestamps_keeps_latest() {
        let f = write_temp("u1,i1,5,10\nu1,i1,3,20\nu1,i2,4,1\n");
        let spec = CsvSpec {
            weight_col: Some(2),
            timestamp_col: Some(3),
            ..CsvSpec::default()
        };
        let raw = load_triplets(f.path(), &spec).unwrap();
        assert_eq!(raw.len(), 2);
        assert_eq!(raw.records[0].weight, 3.0);
        assert_eq!(raw.records[0].timestamp, Some(20));
    }

    #[test]
    fn empty_file_is_empty_not_error() {
        let f = write_temp("");
        let raw = load_triplets(f.path(), &CsvSpec::default()).unwrap();
        assert!(raw.is_empty());
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let f = write_temp("u1,i1\nu2\n");
        let err = load_triplets(f.path(), &CsvSpec::default()).unwrap_err();
        match err {
            IngestError::MalformedRow { line, .. } => assert_eq!(line, 2),
            other => panic!("expected MalformedRow, got {other}"),
        }
    }

    #[test]
    fn bad_weight_reports_line_number() {
        let f = write_temp("u1,i1,ok\n");
        let err = load_triplets(
            f.path(),
            &CsvSpec {
                weight_col: Some(2),
                ..CsvSpec::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { line: 1, .. }));
    }

    #[test]
    fn double_colon_delimiter_header_and_min_rating() {
        let f = write_temp(
            "user::item::rating::ts\n1::10::5::100\n1::11::2::100\n2::10::4::100\n",
        );
        let spec = CsvSpec {
            delimiter: "::".to_owned(),
            has_header: true,
            weight_col: Some(2),
            timestamp_col: Some(3),
            min_rating: Some(4.0),
            ..CsvSpec::default()
        };
        let raw = load_triplets(f.path(), &spec).unwrap();
        assert_eq!(raw.len(), 2);
        assert!(raw.records.iter().all(|r| r.weight >= 4.0));
    }

    #[test]
    fn min_rating_applies_to_the_deduplicated_record() {
        // The pair's latest rating (2) is below threshold, so the pair goes
        // away even though an older rating (5) would have passed.
        let f = write_temp("u,i,5,10\nu,i,2,20\n");
        let spec = CsvSpec {
            weight_col: Some(2),
            timestamp_col: Some(3),
            min_rating: Some(4.0),
            ..CsvSpec::default()
        };
        let raw = load_triplets(f.path(), &spec).unwrap();
        assert!(raw.is_empty());
    }

    #[test]
    fn missing_weight_column_defaults_to_one() {
        let f = write_temp("u1\ti1\nu2\ti1\n");
        let spec = CsvSpec {
            delimiter: "\t".to_owned(),
            ..CsvSpec::default()
        };
        let raw = load_triplets(f.path(), &spec).unwrap();
        assert!(raw.records.iter().all(|r| r.weight == 1.0));
    }

    #[test]
    fn k_core_one_is_identity() {
        let raw = raw_from_pairs(&[("a", "x"), ("b", "x"), ("c", "y")]);
        let filtered = k_core_filter(&raw, 1);
        assert_eq!(pair_set(&filtered), pair_set(&raw));
    }

    #[test]
    fn chain_graph_collapses_to_empty_at_k_two() {
        // Path u1-i1-u2-i2-u3-i3: every pruning pass exposes a new degree-1
        // endpoint until nothing is left.
        let raw = raw_from_pairs(&[
            ("u1", "i1"),
            ("u2", "i1"),
            ("u2", "i2"),
            ("u3", "i2"),
            ("u3", "i3"),
        ]);
        let filtered = k_core_filter(&raw, 2);
        assert!(filtered.is_empty());
    }

    #[test]
    fn dense_block_survives_and_pendants_fall_off() {
        let mut pairs = vec![];
        for u in ["a", "b", "c", "d"] {
            for i in ["w", "x", "y", "z"] {
                pairs.push((u, i));
            }
        }
        pairs.push(("e", "w")); // pendant user
        pairs.push(("a", "v")); // pendant item
        let filtered = k_core_filter(&raw_from_pairs(&pairs), 3);
        assert_eq!(filtered.len(), 16);
        let set = pair_set(&filtered);
        assert!(!set.iter().any(|(u, i)| u == "e" || i == "v"));
    }

    #[test]
    fn k_core_invariant_to_record_order() {
        let mut pairs = vec![];
        for u in 0..12 {
            for i in 0..12 {
                if (u * 7 + i * 3) % 4 != 0 {
                    pairs.push((format!("u{u}"), format!("i{i}")));
                }
            }
        }
        let forward = RawInteractions {
            records: pairs
                .iter()
                .map(|(u, i)| RawRecord {
                    user: u.clone(),
                    item: i.clone(),
                    weight: 1.0,
                    timestamp: None,
                })
                .collect(),
        };
        let mut reversed = forward.clone();
        reversed.records.reverse();
        assert_eq!(
            pair_set(&k_core_filter(&forward, 5)),
            pair_set(&k_core_filter(&reversed, 5))
        );
    }

    #[test]
    fn split_counts_follow_floor_rule() {
        for (n, want_train, want_holdout) in [(10usize, 8usize, 1usize), (19, 17, 1), (9, 9, 0)] {
            let pairs: Vec<(String, String)> =
                (0..n).map(|i| ("u".to_owned(), format!("i{i:02}"))).collect();
            let raw = RawInteractions {
                records: pairs
                    .iter()
                    .map(|(u, i)| RawRecord {
                        user: u.clone(),
                        item: i.clone(),
                        weight: 1.0,
                        timestamp: None,
                    })
                    .collect(),
            };
            let ds = split_per_user(&raw, (0.8, 0.1, 0.1), 7).unwrap();
            assert_eq!(ds.train.nnz(), want_train, "n={n}");
            assert_eq!(ds.validation.nnz(), want_holdout, "n={n}");
            assert_eq!(ds.test.nnz(), want_holdout, "n={n}");
        }
    }

    #[test]
    fn same_seed_reproduces_split_exactly() {
        let raw = demo_raw(25, 18);
        let a = split_per_user(&raw, (0.8, 0.1, 0.1), 42).unwrap();
        let b = split_per_user(&raw, (0.8, 0.1, 0.1), 42).unwrap();
        assert_eq!(a, b);
        let c = split_per_user(&raw, (0.8, 0.1, 0.1), 43).unwrap();
        assert_ne!(a.train, c.train, "different seeds should move the split");
    }

    #[test]
    fn split_of_one_user_is_independent_of_the_others() {
        let full = demo_raw(12, 16);
        let reduced = RawInteractions {
            records: full
                .records
                .iter()
                .filter(|r| r.user != "u03")
                .cloned()
                .collect(),
        };
        let a = split_per_user(&full, (0.8, 0.1, 0.1), 9).unwrap();
        let b = split_per_user(&reduced, (0.8, 0.1, 0.1), 9).unwrap();
        // Compare test-set item tokens per surviving user.
        for ds in [&a, &b] {
            assert_eq!(ds.test.n_users(), ds.user_index.len());
        }
        for u_token in b.user_index.tokens() {
            let tokens = |ds: &SplitDataset| -> HashSet<String> {
                let u = ds.user_index.id(u_token).unwrap();
                ds.test.row(u).0
                    .iter()
                    .map(|&i| ds.item_index.token(i).to_owned())
                    .collect()
            };
            assert_eq!(tokens(&a), tokens(&b), "user {u_token} split moved");
        }
    }

    #[test]
    fn bad_ratios_are_rejected() {
        let raw = demo_raw(3, 16);
        for ratios in [(0.8, 0.1, 0.2), (0.8, -0.1, 0.3), (1.0, 0.0, 0.0)] {
            assert!(matches!(
                split_per_user(&raw, ratios, 1),
                Err(IngestError::BadRatios { .. })
            ));
        }
    }

    #[test]
    fn merge_union_of_disjoint_patterns() {
        let raw = demo_raw(10, 16);
        let ds = split_per_user(&raw, (0.8, 0.1, 0.1), 3).unwrap();
        let merged = merge_train_val(&ds);
        assert_eq!(merged.nnz(), ds.train.nnz() + ds.validation.nnz());
        let union: HashSet<_> = matrix_pairs(&ds.train)
            .union(&matrix_pairs(&ds.validation))
            .copied()
            .collect();
        assert_eq!(matrix_pairs(&merged), union);
        assert!(merged.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn empty_validation_merges_to_train() {
        let ds = SplitDataset {
            train: InteractionMatrix::from_pairs(2, 3, &[(0, 0), (1, 2)]).unwrap(),
            validation: InteractionMatrix::from_pairs(2, 3, &[]).unwrap(),
            test: InteractionMatrix::from_pairs(2, 3, &[(0, 1)]).unwrap(),
            user_index: IndexMap::from_tokens(vec!["a".into(), "b".into()]),
            item_index: IndexMap::from_tokens(vec!["x".into(), "y".into(), "z".into()]),
            seed: 0,
        };
        assert_eq!(merge_train_val(&ds), ds.train);
    }

    #[test]
    fn save_and_load_round_trip() {
        let raw = demo_raw(14, 16);
        let ds = split_per_user(&raw, (0.8, 0.1, 0.1), 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_split(&ds, Some(10), dir.path()).unwrap();
        let (loaded, meta) = load_split(dir.path()).unwrap();
        assert_eq!(loaded, ds);
        assert_eq!(meta.k_core, Some(10));
        assert_eq!(meta.n_train, ds.train.nnz());
    }

    #[test]
    fn load_rejects_tampered_counts() {
        let raw = demo_raw(6, 16);
        let ds = split_per_user(&raw, (0.8, 0.1, 0.1), 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_split(&ds, None, dir.path()).unwrap();
        let meta_path = dir.path().join("metadata.json");
        let meta = std::fs::read_to_string(&meta_path).unwrap();
        let mut parsed: SplitMetadata = serde_json::from_str(&meta).unwrap();
        parsed.n_train += 1;
        std::fs::write(&meta_path, serde_json::to_string(&parsed).unwrap()).unwrap();
        assert!(matches!(
            load_split(dir.path()),
            Err(IngestError::CorruptSplit { .. })
        ));
    }

    /// Every user gets a deterministic profile of ≥ 10 distinct items
    /// (stride-1 window starting at a user-specific offset).
    fn demo_raw(n_users: usize, n_items: usize) -> RawInteractions {
        assert!(n_items >= 16, "profiles need room for up to 16 items");
        let mut records = Vec::new();
        for u in 0..n_users {
            let len = 10 + (u * 13) % 7;
            for t in 0..len {
                let i = (u * 5 + t) % n_items;
                records.push(RawRecord {
                    user: format!("u{u:02}"),
                    item: format!("i{i:02}"),
                    weight: 1.0,
                    timestamp: None,
                });
            }
        }
        // A profile longer than n_items wraps; collapse like the loader.
        let mut seen = HashSet::new();
        records.retain(|r| seen.insert((r.user.clone(), r.item.clone())));
        RawInteractions { records }
    }

    fn arbitrary_raw() -> impl Strategy<Value = RawInteractions> {
        prop::collection::hash_set((0usize..30, 0usize..25), 1..180).prop_map(|pairs| {
            RawInteractions {
                records: pairs
                    .into_iter()
                    .map(|(u, i)| RawRecord {
                        user: format!("u{u}"),
                        item: format!("i{i}"),
                        weight: 1.0,
                        timestamp: None,
                    })
                    .collect(),
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn split_partitions_the_interaction_set(raw in arbitrary_raw(), seed in any::<u64>()) {
            let ds = split_per_user(&raw, (0.8, 0.1, 0.1), seed).unwrap();
            let train = matrix_pairs(&ds.train);
            let val = matrix_pairs(&ds.validation);
            let test = matrix_pairs(&ds.test);
            prop_assert!(train.is_disjoint(&val));
            prop_assert!(train.is_disjoint(&test));
            prop_assert!(val.is_disjoint(&test));
            let mut union: HashSet<(usize, usize)> = train.clone();
            union.extend(&val);
            union.extend(&test);
            let expected: HashSet<(usize, usize)> = raw
                .records
                .iter()
                .map(|r| {
                    (
                        ds.user_index.id(&r.user).unwrap(),
                        ds.item_index.id(&r.item).unwrap(),
                    )
                })
                .collect();
            prop_assert_eq!(union, expected);
            // Every user retains at least one training interaction.
            for u in 0..ds.train.n_users() {
                prop_assert!(!ds.train.row(u).0.is_empty());
            }
        }

        #[test]
        fn k_core_fixed_point_has_min_degree_k(raw in arbitrary_raw(), k in 1usize..5) {
            let out = k_core_filter(&raw, k);
            let mut u_deg: HashMap<&str, usize> = HashMap::new();
            let mut i_deg: HashMap<&str, usize> = HashMap::new();
            for r in &out.records {
                *u_deg.entry(r.user.as_str()).or_insert(0) += 1;
                *i_deg.entry(r.item.as_str()).or_insert(0) += 1;
            }
            prop_assert!(u_deg.values().all(|&d| d >= k));
            prop_assert!(i_deg.values().all(|&d| d >= k));
            // Idempotent: filtering again changes nothing.
            prop_assert_eq!(pair_set(&k_core_filter(&out, k)), pair_set(&out));
        }
    }
}
