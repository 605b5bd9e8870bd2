//! Ranking-quality metrics (AUROC, average precision, AUPRG) and the paired
//! bootstrap used to measure how cleaning shifts a model's scores.
//!
//! Ties in scores are handled per threshold: every metric treats a group of
//! equal scores as a single operating point. For average precision this
//! means a constant scorer gets exactly the positive prevalence.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float;
use crate::rank::{CandidateRef, IssueRanking};
use crate::stats::{median, percentile_interval, replicate_rng, resample_indices, StatsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("metric needs at least one positive and one negative item")]
    SingleClass,
    #[error("no positive items")]
    NoPositives,
    #[error("duplicate item id `{0}`")]
    DuplicateId(String),
    #[error("score for `{0}` is not finite")]
    NonFiniteScore(String),
    #[error("unknown item id `{0}`")]
    UnknownId(String),
    #[error("reference candidate {0:?} is not in the ranking")]
    UnknownCandidate(CandidateRef),
    #[error("cleaned set no longer contains both classes")]
    EmptyAfterCleaning,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub id: String,
    pub score: f64,
    pub label: bool,
}

/// Model scores with binary reference labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredBinarySet {
    items: Vec<ScoredItem>,
}

impl ScoredBinarySet {
    pub fn new(items: Vec<ScoredItem>) -> Result<Self, EvalError> {
        let mut seen = BTreeSet::new();
        for item in &items {
            if !item.score.is_finite() {
                return Err(EvalError::NonFiniteScore(item.id.clone()));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(EvalError::DuplicateId(item.id.clone()));
            }
        }
        Ok(Self { items })
    }

    /// Builds a set with ids `"0"`, `"1"`, ... from parallel slices.
    pub fn from_scores(scores: &[f64], labels: &[bool]) -> Result<Self, EvalError> {
        let items = scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(k, (&score, &label))| ScoredItem { id: alloc::format!("{k}"), score, label })
            .collect();
        Self::new(items)
    }

    pub fn items(&self) -> &[ScoredItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|i| i.label).count()
    }

    fn pairs(&self) -> Vec<(f64, bool)> {
        self.items.iter().map(|i| (i.score, i.label)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Auroc,
    Ap,
    Auprg,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Auroc, MetricKind::Ap, MetricKind::Auprg];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Auroc => "auroc",
            MetricKind::Ap => "ap",
            MetricKind::Auprg => "auprg",
        }
    }

    fn compute(self, items: &[(f64, bool)]) -> Result<f64, EvalError> {
        match self {
            MetricKind::Auroc => auroc_raw(items),
            MetricKind::Ap => average_precision_raw(items),
            MetricKind::Auprg => auprg_raw(items),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Probability that a random positive scores above a random negative, with
/// ties counted as one half.
pub fn auroc(set: &ScoredBinarySet) -> Result<f64, EvalError> {
    auroc_raw(&set.pairs())
}

/// Mean precision over recall increments, one operating point per distinct
/// score.
pub fn average_precision(set: &ScoredBinarySet) -> Result<f64, EvalError> {
    average_precision_raw(&set.pairs())
}

/// Area under the precision-gain / recall-gain curve over recall gain in
/// `[0, 1]`. May be negative.
pub fn auprg(set: &ScoredBinarySet) -> Result<f64, EvalError> {
    auprg_raw(&set.pairs())
}

fn class_counts(items: &[(f64, bool)]) -> (usize, usize) {
    let pos = items.iter().filter(|(_, l)| *l).count();
    (pos, items.len() - pos)
}

fn auroc_raw(items: &[(f64, bool)]) -> Result<f64, EvalError> {
    let (pos, neg) = class_counts(items);
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut sorted: Vec<(f64, bool)> = items.to_vec();
    sorted.sort_by(|a, b| float::cmp(a.0, b.0));
    // Sum of mid-ranks (1-based) of the positives.
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let mut end = k;
        while end < sorted.len() && sorted[end].0 == sorted[k].0 {
            end += 1;
        }
        let mid = (k + 1 + end) as f64 / 2.0;
        let group_pos = sorted[k..end].iter().filter(|(_, l)| *l).count();
        rank_sum += mid * group_pos as f64;
        k = end;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Cumulative `(tp, fp)` after each group of equal scores, best scores first.
fn operating_points(items: &[(f64, bool)]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<(f64, bool)> = items.to_vec();
    sorted.sort_by(|a, b| float::cmp(b.0, a.0));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut k = 0;
    while k < sorted.len() {
        let score = sorted[k].0;
        while k < sorted.len() && sorted[k].0 == score {
            if sorted[k].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            k += 1;
        }
        points.push((tp, fp));
    }
    points
}

fn average_precision_raw(items: &[(f64, bool)]) -> Result<f64, EvalError> {
    let (pos, _) = class_counts(items);
    if pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let p = pos as f64;
    let mut ap = 0.0;
    let mut prev_tp = 0.0;
    for (tp, fp) in operating_points(items) {
        if tp > prev_tp {
            ap += (tp - prev_tp) / p * (tp / (tp + fp));
            prev_tp = tp;
        }
    }
    Ok(ap)
}

fn auprg_raw(items: &[(f64, bool)]) -> Result<f64, EvalError> {
    let (pos, neg) = class_counts(items);
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let p = pos as f64;
    let pi = p / (pos + neg) as f64;
    let odds = pi / (1.0 - pi);
    // Gains in count form; both need tp > 0.
    let gains = |tp: f64, fp: f64| (1.0 - odds * (p - tp) / tp, 1.0 - odds * fp / tp);

    let mut points = alloc::vec![(0.0, 0.0)];
    points.extend(operating_points(items));
    // Recall gain is non-negative once recall reaches the prevalence.
    let threshold_tp = pi * p;
    let first = points.iter().position(|&(tp, _)| tp >= threshold_tp).expect("final point has recall 1");
    let mut curve: Vec<(f64, f64)> = Vec::new();
    let (tp1, fp1) = points[first];
    if tp1 > threshold_tp {
        let (tp0, fp0) = points[first - 1];
        let t = (threshold_tp - tp0) / (tp1 - tp0);
        let fp = fp0 + t * (fp1 - fp0);
        curve.push((0.0, gains(threshold_tp, fp).1));
    }
    curve.extend(points[first..].iter().map(|&(tp, fp)| gains(tp, fp)));
    Ok(curve.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum())
}

/// Agreement between a candidate ranking and confirmed labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingQuality {
    pub auroc: f64,
    pub average_precision: f64,
    pub auprg: f64,
    /// Share of reference items that are confirmed issues.
    pub positive_fraction: f64,
    pub support: usize,
}

/// Scores a ranking against per-candidate confirmations, treating the
/// ranking's issue score as a classifier output. The reference should
/// contain only candidates annotated by every annotator.
pub fn ranking_vs_reference(
    ranking: &IssueRanking,
    reference: &BTreeMap<CandidateRef, bool>,
) -> Result<RankingQuality, EvalError> {
    let positions = ranking.positions();
    let mut items = Vec::with_capacity(reference.len());
    for (candidate, &label) in reference {
        let rank = *positions.get(candidate).ok_or(EvalError::UnknownCandidate(*candidate))?;
        items.push((ranking.issue_score(rank), label));
    }
    let (pos, _) = class_counts(&items);
    Ok(RankingQuality {
        auroc: auroc_raw(&items)?,
        average_precision: average_precision_raw(&items)?,
        auprg: auprg_raw(&items)?,
        positive_fraction: pos as f64 / items.len() as f64,
        support: items.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeltaFlag {
    /// Zero lies strictly outside the interval.
    #[serde(rename = "*")]
    Significant,
    /// An interval endpoint is exactly zero.
    #[serde(rename = "°")]
    Borderline,
    #[serde(rename = "")]
    None,
}

impl DeltaFlag {
    pub fn from_interval(low: f64, high: f64) -> Self {
        if low == 0.0 || high == 0.0 {
            DeltaFlag::Borderline
        } else if low > 0.0 || high < 0.0 {
            DeltaFlag::Significant
        } else {
            DeltaFlag::None
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            DeltaFlag::Significant => "*",
            DeltaFlag::Borderline => "°",
            DeltaFlag::None => "",
        }
    }
}

/// Before/after cleaning difference for one metric, in percentage points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub metric: MetricKind,
    /// Metric on the full original set, in percent.
    pub original: f64,
    /// Metric on the cleaned set, in percent.
    pub cleaned: f64,
    pub median_delta: f64,
    pub ci: [f64; 2],
    pub flag: DeltaFlag,
    pub reps: usize,
    pub skipped: usize,
    pub level: f64,
    pub seed: u64,
}

/// Paired bootstrap of `metric(cleaned) - metric(original)`.
///
/// Each replicate resamples the original items with replacement, evaluates
/// the metric on the replicate and on the replicate with removed items
/// dropped, and records the difference. Replicates where either view lacks
/// one of the classes are skipped.
pub fn cleaning_delta(
    set: &ScoredBinarySet,
    removed: &BTreeSet<String>,
    metrics: &[MetricKind],
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<Vec<DeltaReport>, EvalError> {
    let ids: BTreeSet<&str> = set.items.iter().map(|i| i.id.as_str()).collect();
    if let Some(unknown) = removed.iter().find(|r| !ids.contains(r.as_str())) {
        return Err(EvalError::UnknownId(unknown.clone()));
    }
    if reps == 0 {
        return Err(StatsError::OutOfRange { name: "reps", value: 0.0 }.into());
    }
    if !(level > 0.0 && level < 100.0) {
        return Err(StatsError::OutOfRange { name: "level", value: level }.into());
    }
    let all = set.pairs();
    let keep: Vec<bool> = set.items.iter().map(|i| !removed.contains(&i.id)).collect();
    let cleaned: Vec<(f64, bool)> = all.iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| *x).collect();
    let both = |xs: &[(f64, bool)]| {
        let (p, n) = class_counts(xs);
        p > 0 && n > 0
    };
    if !both(&all) {
        return Err(EvalError::SingleClass);
    }
    if !both(&cleaned) {
        return Err(EvalError::EmptyAfterCleaning);
    }

    let mut deltas: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(reps); metrics.len()];
    let mut skipped = 0;
    let mut sample = Vec::with_capacity(all.len());
    let mut sample_clean = Vec::with_capacity(all.len());
    for rep in 0..reps {
        let mut rng = replicate_rng(seed, rep as u64);
        sample.clear();
        sample_clean.clear();
        for k in resample_indices(&mut rng, all.len()) {
            sample.push(all[k]);
            if keep[k] {
                sample_clean.push(all[k]);
            }
        }
        if !both(&sample) || !both(&sample_clean) {
            skipped += 1;
            continue;
        }
        for (m, metric) in metrics.iter().enumerate() {
            let before = metric.compute(&sample)?;
            let after = metric.compute(&sample_clean)?;
            deltas[m].push(100.0 * (after - before));
        }
    }

    metrics
        .iter()
        .zip(deltas)
        .map(|(&metric, mut values)| {
            let (lo, hi) = percentile_interval(&mut values, level).ok_or(StatsError::AllReplicatesDegenerate)?;
            let median_delta = median(&mut values).expect("non-empty after interval");
            Ok(DeltaReport {
                metric,
                original: 100.0 * metric.compute(&all)?,
                cleaned: 100.0 * metric.compute(&cleaned)?,
                median_delta,
                ci: [lo, hi],
                flag: DeltaFlag::from_interval(lo, hi),
                reps,
                skipped,
                level,
                seed,
            })
        })
        .collect()
}
