//! Scoring the estimators against ground truth: dataset loading and replay,
//! train/test splitting, factor training and error metrics.

mod dataset;
mod metrics;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{
    entry_store, load_ground_truth, replay, replay_all, FailureKind, GroundTruth, GroundTruthEntry, LoadFailure,
    ReplayOutcome, ReplaySummary,
};
pub use metrics::{avg_abs_diff, pct_avg_diff, MetricError};

use crate::analysis::{AnalysisError, QueryAnalysis};
use crate::estimator::{check_inputs, estimate_analyzed, EstimateError, EstimatorConfig, Method};
use crate::stats::StatsCatalog;

/// Factors used when no training data is available.
pub const DEFAULT_F1: f64 = 0.9;
pub const DEFAULT_F2: f64 = 0.9;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no entries to score")]
    EmptyInput,
    #[error("split ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),
    #[error("grid value {0} is outside [0, 1]")]
    InvalidGrid(f64),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// An entry left out of scoring, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub id: String,
    pub reason: String,
}

/// The factor grid {0.0, 0.1, ..., 1.0}.
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Deterministic shuffle under `seed`, then the first round(ratio × n)
/// entries train. Both halves keep the input order.
pub fn split<T: Clone>(entries: &[T], seed: u64, ratio: f64) -> Result<(Vec<T>, Vec<T>), EvalError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EvalError::InvalidRatio(ratio));
    }
    let mut idx: Vec<usize> = (0..entries.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = (ratio * entries.len() as f64).round() as usize;
    let (mut train, mut test) = (idx[..k].to_vec(), idx[k..].to_vec());
    train.sort_unstable();
    test.sort_unstable();
    let pick = |ix: Vec<usize>| ix.into_iter().map(|i| entries[i].clone()).collect();
    Ok((pick(train), pick(test)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub seed: u64,
    pub ratio: f64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

impl SplitInfo {
    pub fn new(seed: u64, ratio: f64, train: &[GroundTruthEntry], test: &[GroundTruthEntry]) -> Self {
        Self {
            seed,
            ratio,
            train_ids: train.iter().map(|e| e.id.clone()).collect(),
            test_ids: test.iter().map(|e| e.id.clone()).collect(),
        }
    }
}

struct Prepared<'a> {
    entry: &'a GroundTruthEntry,
    analysis: QueryAnalysis,
}

fn prepare(entries: &[GroundTruthEntry]) -> (Vec<Prepared<'_>>, Vec<SkippedEntry>) {
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for entry in entries {
        match QueryAnalysis::new(&entry.query) {
            Ok(analysis) => ok.push(Prepared { entry, analysis }),
            Err(AnalysisError::NotAnswerable { witness }) => skipped.push(SkippedEntry {
                id: entry.id.clone(),
                reason: format!("not answerable (unanchored triples {witness:?})"),
            }),
            Err(e) => skipped.push(SkippedEntry {
                id: entry.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    (ok, skipped)
}

fn estimated(p: &Prepared, catalog: &StatsCatalog, config: &EstimatorConfig) -> Result<f64, EvalError> {
    Ok(estimate_analyzed(&p.entry.query, &p.analysis, catalog, config)?.ceiled_total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedFactors {
    pub f1: f64,
    pub f2: f64,
    /// Mpjf AvgAbsDiff on the training entries at the chosen point.
    pub avg_abs_diff: f64,
    pub n: usize,
    pub skipped: Vec<SkippedEntry>,
}

/// Exhaustive grid search for the (f1, f2) minimizing Mpjf's AvgAbsDiff
/// on `train`. Among equal scores the larger f1 wins, then the larger f2.
pub fn train_factors(
    train: &[GroundTruthEntry],
    catalog: &StatsCatalog,
    grid: &[f64],
) -> Result<TrainedFactors, EvalError> {
    if let Some(&bad) = grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(EvalError::InvalidGrid(bad));
    }
    if grid.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    check_inputs(catalog, &EstimatorConfig::default())?;
    let (prepared, skipped) = prepare(train);
    if prepared.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for &f1 in grid {
        for &f2 in grid {
            let config = EstimatorConfig::new(Method::Mpjf, f1, f2);
            let pairs = prepared
                .iter()
                .map(|p| Ok((p.entry.real_cost as f64, estimated(p, catalog, &config)?)))
                .collect::<Result<Vec<_>, EvalError>>()?;
            let score = avg_abs_diff(&pairs)?;
            let better = match best {
                None => true,
                Some((s, b1, b2)) => score < s || (score == s && (f1, f2) > (b1, b2)),
            };
            if better {
                best = Some((score, f1, f2));
            }
        }
    }
    let (avg_abs_diff, f1, f2) = best.expect("grid is non-empty");
    Ok(TrainedFactors {
        f1,
        f2,
        avg_abs_diff,
        n: prepared.len(),
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub avg_abs_diff: f64,
    pub pct_avg_diff: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub n: usize,
    /// Empty when the subset has no entries.
    pub per_method: BTreeMap<Method, MethodScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryScore {
    pub id: String,
    pub real_cost: u64,
    pub estimates: BTreeMap<Method, u64>,
    pub star_joins: bool,
    pub filters: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    pub f1: f64,
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_method: BTreeMap<Method, MethodScore>,
    pub star_joins: SubsetReport,
    pub star_joins_with_filters: SubsetReport,
    pub factors: Factors,
    pub split: Option<SplitInfo>,
    pub entries: Vec<EntryScore>,
    pub skipped: Vec<SkippedEntry>,
}

fn subset<'a>(rows: impl Iterator<Item = &'a EntryScore>) -> Result<SubsetReport, EvalError> {
    let rows: Vec<&EntryScore> = rows.collect();
    let mut per_method = BTreeMap::new();
    if !rows.is_empty() {
        for m in Method::ALL {
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.real_cost as f64, r.estimates[&m] as f64)).collect();
            per_method.insert(
                m,
                MethodScore {
                    avg_abs_diff: avg_abs_diff(&pairs)?,
                    pct_avg_diff: pct_avg_diff(&pairs)?,
                    n: pairs.len(),
                },
            );
        }
    }
    Ok(SubsetReport {
        n: rows.len(),
        per_method,
    })
}

/// Score all four methods on `test`, plus the star-join and
/// star-join-with-filter subsets. Unanswerable entries are listed in
/// `skipped`.
pub fn evaluate(test: &[GroundTruthEntry], catalog: &StatsCatalog, f1: f64, f2: f64) -> Result<EvalReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    check_inputs(catalog, &EstimatorConfig::new(Method::Mpjf, f1, f2))?;
    let (prepared, skipped) = prepare(test);
    let mut entries = Vec::with_capacity(prepared.len());
    for p in &prepared {
        let mut estimates = BTreeMap::new();
        for m in Method::ALL {
            estimates.insert(m, estimated(p, catalog, &EstimatorConfig::new(m, f1, f2))? as u64);
        }
        entries.push(EntryScore {
            id: p.entry.id.clone(),
            real_cost: p.entry.real_cost,
            estimates,
            star_joins: p.analysis.has_star_joins(),
            filters: !p.entry.query.filters.is_empty(),
        });
    }
    let all = subset(entries.iter())?;
    Ok(EvalReport {
        per_method: all.per_method,
        star_joins: subset(entries.iter().filter(|e| e.star_joins))?,
        star_joins_with_filters: subset(entries.iter().filter(|e| e.star_joins && e.filters))?,
        factors: Factors { f1, f2 },
        split: None,
        entries,
        skipped,
    })
}

impl EvalReport {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text tables, one per query selection.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "f1 = {}, f2 = {}", self.factors.f1, self.factors.f2);
        let sections = [
            ("All queries", self.n(), &self.per_method),
            ("Star joins", self.star_joins.n, &self.star_joins.per_method),
            (
                "Star joins with filters",
                self.star_joins_with_filters.n,
                &self.star_joins_with_filters.per_method,
            ),
        ];
        for (title, n, scores) in sections {
            let _ = writeln!(out, "\n{title} (n = {n})");
            if scores.is_empty() {
                let _ = writeln!(out, "  no queries");
                continue;
            }
            let _ = writeln!(out, "{:<8}{:>14}{:>12}", "Method", "AvgAbsDiff", "%AvgDiff");
            for (m, s) in scores {
                let _ = writeln!(
                    out,
                    "{:<8}{:>14.1}{:>12}",
                    m.name(),
                    s.avg_abs_diff,
                    format!("{:+.1}%", s.pct_avg_diff)
                );
            }
        }
        if !self.skipped.is_empty() {
            let _ = writeln!(out, "\nSkipped {} entries:", self.skipped.len());
            for s in &self.skipped {
                let _ = writeln!(out, "  {}: {}", s.id, s.reason);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_partitions_deterministically() {
        let items: Vec<u32> = (0..10).collect();
        let (a, b) = split(&items, 7, 0.5).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        let mut all: Vec<u32> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, items);
        assert_eq!(split(&items, 7, 0.5).unwrap(), (a, b));
    }

    #[test]
    fn split_rounds_half_up_on_odd_sizes() {
        let items: Vec<u32> = (0..2425).collect();
        // round(0.5 × 2425) = round(1212.5), with halves rounding away from zero
        let expected_train = (2425 / 2) + 1;
        let (a, b) = split(&items, 1, 0.5).unwrap();
        assert_eq!((a.len(), b.len()), (expected_train, 2425 - expected_train));
    }

    #[test]
    fn split_rejects_degenerate_ratios() {
        for r in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(split(&[1, 2], 0, r), Err(EvalError::InvalidRatio(_))));
        }
    }

    #[test]
    fn default_grid_has_eleven_points() {
        let g = default_grid();
        assert_eq!(g.len(), 11);
        assert_eq!((g[0], g[5], g[10]), (0.0, 0.5, 1.0));
    }
}
