//! Combining annotators' verdicts into confirmed issues, and turning those
//! into cleaned file lists.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DatasetManifest;
use crate::protocol::Verdict;
use crate::rank::{CandidateRef, NoiseType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("no annotator logs to aggregate")]
    NoAnnotators,
    #[error("annotator logs mix noise types ({0} and {1})")]
    MixedNoiseTypes(NoiseType, NoiseType),
    #[error("unknown sample id `{0}`")]
    UnknownId(String),
    #[error("a duplicate pair must name two different samples (`{0}`)")]
    SelfPair(String),
    #[error("unknown aggregation mode `{0}` (expected `majority` or `unanimous`)")]
    UnknownMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    Majority,
    #[default]
    Unanimous,
}

impl AggregationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregationMode::Majority => "majority",
            AggregationMode::Unanimous => "unanimous",
        }
    }

    /// Whether `yes` affirmative votes out of `total` confirm an issue.
    pub fn confirms(self, yes: usize, total: usize) -> bool {
        match self {
            AggregationMode::Majority => 2 * yes > total,
            AggregationMode::Unanimous => total > 0 && yes == total,
        }
    }
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregationMode {
    type Err = AggregateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(AggregationMode::Majority),
            "unanimous" => Ok(AggregationMode::Unanimous),
            other => Err(AggregateError::UnknownMode(other.into())),
        }
    }
}

/// One annotator's ordered answers for one noise type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorLog {
    pub annotator: String,
    pub noise_type: NoiseType,
    pub verdicts: Vec<(CandidateRef, Verdict)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Yes,
    No,
    /// Beyond the annotator's stop or exhaustion point.
    Unseen,
}

impl Cell {
    /// Unseen counts as a "no": the stopping rule vouches for the tail.
    pub fn effective(self) -> Verdict {
        match self {
            Cell::Yes => Verdict::Yes,
            Cell::No | Cell::Unseen => Verdict::No,
        }
    }
}

impl From<Verdict> for Cell {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Yes => Cell::Yes,
            Verdict::No => Cell::No,
        }
    }
}

/// Candidates seen by at least one annotator, with every annotator's cell.
/// Rows keep first-appearance order, which is ranking order when all logs
/// walk the same ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictTable {
    pub noise_type: NoiseType,
    pub annotators: Vec<String>,
    pub rows: Vec<(CandidateRef, Vec<Cell>)>,
}

impl VerdictTable {
    pub fn from_logs(logs: &[AnnotatorLog]) -> Result<Self, AggregateError> {
        let first = logs.first().ok_or(AggregateError::NoAnnotators)?;
        if let Some(other) = logs.iter().find(|l| l.noise_type != first.noise_type) {
            return Err(AggregateError::MixedNoiseTypes(first.noise_type, other.noise_type));
        }
        let mut index: BTreeMap<CandidateRef, usize> = BTreeMap::new();
        let mut rows: Vec<(CandidateRef, Vec<Cell>)> = Vec::new();
        for (a, log) in logs.iter().enumerate() {
            for &(candidate, verdict) in &log.verdicts {
                let row = *index.entry(candidate).or_insert_with(|| {
                    rows.push((candidate, alloc::vec![Cell::Unseen; logs.len()]));
                    rows.len() - 1
                });
                rows[row].1[a] = verdict.into();
            }
        }
        Ok(Self { noise_type: first.noise_type, annotators: logs.iter().map(|l| l.annotator.clone()).collect(), rows })
    }

    pub fn confirmed(&self, mode: AggregationMode) -> Vec<CandidateRef> {
        self.rows
            .iter()
            .filter(|(_, cells)| {
                let yes = cells.iter().filter(|c| c.effective().is_yes()).count();
                mode.confirms(yes, cells.len())
            })
            .map(|(c, _)| *c)
            .collect()
    }

    /// Rows annotated by every annotator.
    pub fn fully_seen(&self) -> impl Iterator<Item = &(CandidateRef, Vec<Cell>)> + '_ {
        self.rows.iter().filter(|(_, cells)| cells.iter().all(|c| *c != Cell::Unseen))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmedSet {
    pub noise_type: NoiseType,
    pub mode: AggregationMode,
    pub candidates: Vec<CandidateRef>,
}

/// Confirms candidates across annotators. Unseen cells count as "no";
/// majority needs strictly more than half of all annotators.
pub fn aggregate(logs: &[AnnotatorLog], mode: AggregationMode) -> Result<ConfirmedSet, AggregateError> {
    let table = VerdictTable::from_logs(logs)?;
    Ok(ConfirmedSet { noise_type: table.noise_type, mode, candidates: table.confirmed(mode) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub dataset: String,
    pub mode: AggregationMode,
    pub n: usize,
    pub confirmed_irrelevant: Vec<String>,
    pub confirmed_duplicate_pairs: Vec<[String; 2]>,
    pub removed_duplicates: Vec<String>,
    pub label_error_count: usize,
    pub label_error_prevalence: f64,
    pub cleaned_ids: Vec<String>,
    pub seed: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CleanReport {
    /// Records the confirmed label-error count. Labels and the cleaned list
    /// are left untouched.
    pub fn with_label_errors(mut self, count: usize) -> Self {
        self.label_error_count = count;
        self.label_error_prevalence = estimate_label_error_prevalence(count, self.n);
        self
    }
}

/// Builds the cleaned id list: drops every confirmed irrelevant sample, then
/// for each confirmed duplicate pair (in the given order) whose members both
/// survive, removes one member picked by a seeded uniform draw.
///
/// Pairs that chain into a group of three or more samples keep a single
/// randomly drawn member of the group, and a warning is recorded.
pub fn build_clean_list<S: AsRef<str>>(
    manifest: &DatasetManifest,
    mode: AggregationMode,
    confirmed_irrelevant: &[S],
    confirmed_pairs: &[(S, S)],
    seed: u64,
) -> Result<CleanReport, AggregateError> {
    let n = manifest.len();
    let index: BTreeMap<&str, usize> = manifest.samples().iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let lookup = |id: &str| index.get(id).copied().ok_or_else(|| AggregateError::UnknownId(id.into()));

    let mut removed = alloc::vec![false; n];
    let mut irrelevant = BTreeSet::new();
    for id in confirmed_irrelevant {
        let i = lookup(id.as_ref())?;
        removed[i] = true;
        irrelevant.insert(i);
    }
    let mut pairs = Vec::with_capacity(confirmed_pairs.len());
    for (a, b) in confirmed_pairs {
        let (i, j) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
        if i == j {
            return Err(AggregateError::SelfPair(a.as_ref().into()));
        }
        pairs.push((i.min(j), i.max(j)));
    }

    // Groups of samples linked by confirmed pairs, ignoring removed samples.
    let mut groups = Groups::new(n);
    for &(i, j) in &pairs {
        if !removed[i] && !removed[j] {
            groups.union(i, j);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut removed_duplicates = Vec::new();
    let mut warnings = Vec::new();
    for &(i, j) in &pairs {
        if removed[i] || removed[j] {
            continue;
        }
        let root = groups.find(i);
        let members = groups.members(root);
        if members.len() == 2 {
            let drop = if rng.random_range(0..2u32) == 0 { i } else { j };
            removed[drop] = true;
            removed_duplicates.push(drop);
        } else {
            let keep = members[rng.random_range(0..members.len())];
            for &m in &members {
                if m != keep {
                    removed[m] = true;
                    removed_duplicates.push(m);
                }
            }
            warnings.push(format!(
                "{} confirmed duplicates form one group; kept `{}` only",
                members.len(),
                manifest.samples()[keep].id
            ));
        }
    }

    let id = |i: usize| manifest.samples()[i].id.clone();
    Ok(CleanReport {
        dataset: manifest.name().into(),
        mode,
        n,
        confirmed_irrelevant: irrelevant.into_iter().map(id).collect(),
        confirmed_duplicate_pairs: pairs.iter().map(|&(i, j)| [id(i), id(j)]).collect(),
        removed_duplicates: removed_duplicates.into_iter().map(id).collect(),
        label_error_count: 0,
        label_error_prevalence: 0.0,
        cleaned_ids: (0..n).filter(|&i| !removed[i]).map(id).collect(),
        seed,
        warnings,
    })
}

/// Fraction of the dataset confirmed as label errors.
pub fn estimate_label_error_prevalence(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 / n as f64
    }
}

struct Groups {
    parent: Vec<usize>,
}

impl Groups {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Members of the group rooted at `root`, ascending.
    fn members(&mut self, root: usize) -> Vec<usize> {
        (0..self.parent.len()).filter(|&x| self.find(x) == root).collect()
    }
}
