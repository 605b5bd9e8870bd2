//! Candidate rankings for the three noise types.
//!
//! Each ranker orders the whole candidate pool (every sample, or every pair of
//! samples) so that entries near the top are the most likely to be issues.
//! Ties are always broken by ascending candidate indices, so rankings are
//! fully deterministic.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DistanceMatrix;
use crate::float;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankError {
    #[error("ranking needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("all pairwise distances are equal; the ranking is undefined")]
    DegenerateDistances,
    #[error("label-error ranking needs at least 2 distinct classes")]
    SingleClass,
    #[error("sample {0} has no label")]
    MissingLabel(usize),
    #[error("got {labels} labels for {samples} samples")]
    LabelCount { labels: usize, samples: usize },
    #[error("neighbour count k must be at least 1")]
    InvalidK,
    #[error("unknown noise type `{0}`")]
    UnknownNoiseType(alloc::string::String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseType {
    Irrelevant,
    NearDuplicate,
    LabelError,
}

impl NoiseType {
    pub const ALL: [NoiseType; 3] = [NoiseType::Irrelevant, NoiseType::NearDuplicate, NoiseType::LabelError];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseType::Irrelevant => "irrelevant",
            NoiseType::NearDuplicate => "near_duplicate",
            NoiseType::LabelError => "label_error",
        }
    }

    /// Size of the candidate pool for a dataset of `n` samples.
    pub fn pool_size(self, n: usize) -> u64 {
        let n = n as u64;
        match self {
            NoiseType::NearDuplicate => n * n.saturating_sub(1) / 2,
            _ => n,
        }
    }

    /// The binary question shown to annotators. A "yes" answer confirms the
    /// candidate as an issue.
    pub fn question(self) -> &'static str {
        match self {
            NoiseType::Irrelevant => {
                "Your task is to judge if the image shown is irrelevant. \
                 Select yes when the image is not a valid input for the task at hand."
            }
            NoiseType::NearDuplicate => {
                "Your task is to judge whether the two images shown together are pictures of the same object. \
                 Note that pictures of the same object can be identical or different shots with the same object of interest."
            }
            NoiseType::LabelError => {
                "Your task is to judge whether the image's label is correct. \
                 Please select that the label is an error only if you think it is wrong and not when there is low uncertainty or ambiguity."
            }
        }
    }

    /// True when higher ranking scores mean "more likely an issue".
    pub fn descending_scores(self) -> bool {
        !matches!(self, NoiseType::NearDuplicate)
    }
}

impl fmt::Display for NoiseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseType {
    type Err = RankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "irrelevant" => Ok(NoiseType::Irrelevant),
            "near_duplicate" | "near-duplicate" => Ok(NoiseType::NearDuplicate),
            "label_error" | "label-error" => Ok(NoiseType::LabelError),
            other => Err(RankError::UnknownNoiseType(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Single,
    Pair,
}

/// A single sample or an unordered pair of samples, by manifest index.
///
/// Pairs are stored with `i < j`. The derived ordering is lexicographic on
/// `(i, j)`, which is the tie-break order used by every ranker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidateRef {
    i: u32,
    j: Option<u32>,
}

impl CandidateRef {
    pub fn single(i: usize) -> Self {
        Self { i: i as u32, j: None }
    }

    /// Builds a pair, normalizing the index order. `a` and `b` must differ.
    pub fn pair(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "a pair needs two distinct samples");
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        Self { i: i as u32, j: Some(j as u32) }
    }

    pub fn kind(&self) -> CandidateKind {
        if self.j.is_some() {
            CandidateKind::Pair
        } else {
            CandidateKind::Single
        }
    }

    pub fn first(&self) -> usize {
        self.i as usize
    }

    pub fn second(&self) -> Option<usize> {
        self.j.map(|j| j as usize)
    }

    /// Member indices: one for singles, two (ascending) for pairs.
    pub fn indices(&self) -> impl Iterator<Item = usize> {
        core::iter::once(self.i as usize).chain(self.j.map(|j| j as usize))
    }

    /// Applies an index mapping, re-normalizing pair order.
    pub fn map(&self, f: impl Fn(usize) -> usize) -> Self {
        match self.j {
            None => Self::single(f(self.i as usize)),
            Some(j) => Self::pair(f(self.i as usize), f(j as usize)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub candidate: CandidateRef,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueRanking {
    noise_type: NoiseType,
    entries: Vec<RankedCandidate>,
}

impl IssueRanking {
    /// Wraps pre-ordered entries, e.g. a ranking read back from disk.
    pub fn from_entries(noise_type: NoiseType, entries: Vec<RankedCandidate>) -> Self {
        Self { noise_type, entries }
    }

    pub fn noise_type(&self) -> NoiseType {
        self.noise_type
    }

    pub fn entries(&self) -> &[RankedCandidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, rank: usize) -> Option<&RankedCandidate> {
        self.entries.get(rank)
    }

    pub fn candidates(&self) -> impl Iterator<Item = CandidateRef> + '_ {
        self.entries.iter().map(|e| e.candidate)
    }

    /// Score oriented so that larger always means "more likely an issue".
    pub fn issue_score(&self, rank: usize) -> f64 {
        let s = self.entries[rank].score;
        if self.noise_type.descending_scores() {
            s
        } else {
            -s
        }
    }

    /// Map from candidate to its rank position.
    pub fn positions(&self) -> BTreeMap<CandidateRef, usize> {
        self.entries.iter().enumerate().map(|(k, e)| (e.candidate, k)).collect()
    }
}

fn sort_descending(entries: &mut [RankedCandidate]) {
    entries.sort_by(|a, b| float::cmp(b.score, a.score).then(a.candidate.cmp(&b.candidate)));
}

fn sort_ascending(entries: &mut [RankedCandidate]) {
    entries.sort_by(|a, b| float::cmp(a.score, b.score).then(a.candidate.cmp(&b.candidate)));
}

/// One merge of a single-linkage dendrogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub height: f64,
    /// Representative sample of each merged cluster (smallest member index).
    pub left: usize,
    pub right: usize,
    pub left_size: usize,
    pub right_size: usize,
}

/// Single-linkage merge sequence, built from the minimum spanning tree
/// (Prim, `O(n^2)` on the dense matrix) followed by union-find over its
/// edges in ascending `(height, i, j)` order.
pub fn single_linkage(dist: &DistanceMatrix) -> Vec<Merge> {
    let n = dist.n();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = alloc::vec![false; n];
    let mut best = alloc::vec![f64::INFINITY; n];
    let mut parent = alloc::vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for (j, b) in best.iter_mut().enumerate().skip(1) {
        *b = dist.get(0, j);
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        let (a, b) = (parent[next].min(next), parent[next].max(next));
        edges.push((best[next], a, b));
        for j in 0..n {
            if !in_tree[j] && dist.get(next, j) < best[j] {
                best[j] = dist.get(next, j);
                parent[j] = next;
            }
        }
    }
    edges.sort_by(|x, y| float::cmp(x.0, y.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let mut uf = UnionFind::new(n);
    edges
        .into_iter()
        .map(|(height, a, b)| {
            let (ra, rb) = (uf.find(a), uf.find(b));
            let merge = Merge {
                height,
                left: uf.min_member[ra],
                right: uf.min_member[rb],
                left_size: uf.size[ra],
                right_size: uf.size[rb],
            };
            uf.union(ra, rb);
            merge
        })
        .collect()
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    min_member: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: alloc::vec![1; n], min_member: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.min_member[big] = self.min_member[big].min(self.min_member[small]);
        big
    }
}

/// Ranks samples as irrelevant-sample candidates.
///
/// Each sample is scored by the height of the latest single-linkage merge in
/// which its cluster was the minority side (smaller cardinality; on equal
/// cardinality the side formed at the greater height, and both sides if that
/// ties too), divided by the largest merge height. Samples and small groups
/// that join the rest of the data late score close to 1.
pub fn rank_irrelevant(dist: &DistanceMatrix) -> Result<IssueRanking, RankError> {
    let n = dist.n();
    if n < 2 {
        return Err(RankError::TooFewSamples(n));
    }
    let first = dist.get(0, 1);
    if (0..n).all(|i| ((i + 1)..n).all(|j| dist.get(i, j) == first)) {
        return Err(RankError::DegenerateDistances);
    }

    let merges = single_linkage(dist);
    let max_height = merges.last().map_or(0.0, |m| m.height);
    if max_height <= 0.0 {
        return Err(RankError::DegenerateDistances);
    }

    // Cluster members and formation height, keyed by the representative.
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| alloc::vec![i]).collect();
    let mut formed_at = alloc::vec![0.0f64; n];
    let mut score = alloc::vec![0.0f64; n];
    for m in &merges {
        let (l, r) = (m.left, m.right);
        let (left_minor, right_minor) = match m.left_size.cmp(&m.right_size) {
            core::cmp::Ordering::Less => (true, false),
            core::cmp::Ordering::Greater => (false, true),
            core::cmp::Ordering::Equal => match float::cmp(formed_at[l], formed_at[r]) {
                core::cmp::Ordering::Greater => (true, false),
                core::cmp::Ordering::Less => (false, true),
                core::cmp::Ordering::Equal => (true, true),
            },
        };
        for (side, minor) in [(l, left_minor), (r, right_minor)] {
            if minor {
                for &i in &members[side] {
                    score[i] = m.height;
                }
            }
        }
        let (keep, gone) = if l < r { (l, r) } else { (r, l) };
        let moved = core::mem::take(&mut members[gone]);
        members[keep].extend(moved);
        formed_at[keep] = m.height;
    }

    let mut entries: Vec<RankedCandidate> = score
        .into_iter()
        .enumerate()
        .map(|(i, s)| RankedCandidate { candidate: CandidateRef::single(i), score: s / max_height })
        .collect();
    sort_descending(&mut entries);
    Ok(IssueRanking { noise_type: NoiseType::Irrelevant, entries })
}

/// Ranks all `n(n-1)/2` pairs by ascending distance.
pub fn rank_near_duplicates(dist: &DistanceMatrix) -> Result<IssueRanking, RankError> {
    let n = dist.n();
    if n < 2 {
        return Err(RankError::TooFewSamples(n));
    }
    let mut entries = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            entries.push(RankedCandidate { candidate: CandidateRef::pair(i, j), score: dist.get(i, j) });
        }
    }
    sort_ascending(&mut entries);
    Ok(IssueRanking { noise_type: NoiseType::NearDuplicate, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelErrorConfig {
    /// Neighbours averaged for the intra- and extra-class distances.
    pub k: usize,
}

impl Default for LabelErrorConfig {
    fn default() -> Self {
        Self { k: 1 }
    }
}

/// Ranks samples as label-error candidates by `intra / (intra + extra)`,
/// where `intra` is the mean distance to the `k` nearest samples sharing the
/// label and `extra` the mean distance to the `k` nearest samples with a
/// different label.
///
/// A sample whose class has no other member gets `intra` equal to the largest
/// pairwise distance in the dataset. When both distances are zero the score
/// is 0.5.
pub fn rank_label_errors<S: AsRef<str>>(
    dist: &DistanceMatrix,
    labels: &[Option<S>],
    config: LabelErrorConfig,
) -> Result<IssueRanking, RankError> {
    let n = dist.n();
    if labels.len() != n {
        return Err(RankError::LabelCount { labels: labels.len(), samples: n });
    }
    if config.k == 0 {
        return Err(RankError::InvalidK);
    }
    let mut classes: BTreeMap<&str, u32> = BTreeMap::new();
    let mut class_of = Vec::with_capacity(n);
    for (i, label) in labels.iter().enumerate() {
        let label = label.as_ref().ok_or(RankError::MissingLabel(i))?.as_ref();
        let next = classes.len() as u32;
        class_of.push(*classes.entry(label).or_insert(next));
    }
    if classes.len() < 2 {
        return Err(RankError::SingleClass);
    }
    let max = dist.max();

    let mut same = Vec::with_capacity(n);
    let mut other = Vec::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        same.clear();
        other.clear();
        for (j, &d) in dist.row(i).iter().enumerate() {
            if j == i {
                continue;
            }
            if class_of[j] == class_of[i] {
                same.push(d);
            } else {
                other.push(d);
            }
        }
        let intra = mean_of_smallest(&mut same, config.k).unwrap_or(max);
        let extra = mean_of_smallest(&mut other, config.k).unwrap_or(max);
        let total = intra + extra;
        let score = if total > 0.0 { intra / total } else { 0.5 };
        entries.push(RankedCandidate { candidate: CandidateRef::single(i), score });
    }
    sort_descending(&mut entries);
    Ok(IssueRanking { noise_type: NoiseType::LabelError, entries })
}

fn mean_of_smallest(values: &mut [f64], k: usize) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let k = k.min(values.len());
    if k < values.len() {
        values.select_nth_unstable_by(k - 1, |a, b| float::cmp(*a, *b));
    }
    let head = &values[..k];
    Some(head.iter().sum::<f64>() / k as f64)
}
