//! Dataset-level analyses over stored sessions: aggregation, cleaning,
//! agreement, evaluation, stopping-rule sensitivity and summary reports.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use dqclean_core::aggregate::{build_clean_list, AggregationMode, AnnotatorLog, Cell, CleanReport, VerdictTable};
use dqclean_core::eval::{cleaning_delta, ranking_vs_reference, DeltaReport, MetricKind, RankingQuality};
use dqclean_core::protocol::{default_sweep_grid, sensitivity_sweep, SessionStatus, SweepPoint, Verdict};
use dqclean_core::rank::NoiseType;
use dqclean_core::stats::{
    agreement_band, bootstrap_ci, cohen_kappa, krippendorff_alpha, speed_up, DEFAULT_BOOTSTRAP_REPS,
    DEFAULT_CONFIDENCE_LEVEL,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_scores, write_atomic, write_clean_list, StatsReport};
use crate::store::{Dataset, DatasetSummary, Store};

/// Verdict logs for one noise type, one per annotator. When an annotator has
/// several sessions the most recently started one counts; the others are
/// named in the returned warnings.
pub fn annotator_logs(store: &Store, dataset: &str, noise_type: NoiseType) -> (Vec<AnnotatorLog>, Vec<String>) {
    let mut latest: BTreeMap<String, AnnotatorLog> = BTreeMap::new();
    let mut warnings = Vec::new();
    for snap in store.sessions_for(dataset, Some(noise_type)) {
        let s = &snap.session;
        let log = AnnotatorLog { annotator: s.annotator_id().to_string(), noise_type, verdicts: s.verdicts().to_vec() };
        if latest.insert(log.annotator.clone(), log).is_some() {
            warnings.push(format!(
                "{noise_type}: annotator `{}` has several sessions; using `{}`",
                s.annotator_id(),
                s.session_id()
            ));
        }
    }
    (latest.into_values().collect(), warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAggregate {
    pub noise_type: NoiseType,
    pub annotators: Vec<String>,
    /// Confirmed candidates as id lists, in candidate order.
    pub confirmed: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateView {
    pub dataset: String,
    pub mode: AggregationMode,
    pub results: Vec<NoiseAggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn confirmed_for(
    store: &Store,
    ds: &Dataset,
    noise_type: NoiseType,
    mode: AggregationMode,
    warnings: &mut Vec<String>,
) -> Result<NoiseAggregate> {
    let (logs, w) = annotator_logs(store, ds.name(), noise_type);
    warnings.extend(w);
    let annotators = logs.iter().map(|l| l.annotator.clone()).collect();
    let confirmed = if logs.is_empty() {
        Vec::new()
    } else {
        let mut cands = VerdictTable::from_logs(&logs)?.confirmed(mode);
        cands.sort();
        cands.iter().map(|c| ds.candidate_ids(c)).collect()
    };
    Ok(NoiseAggregate { noise_type, annotators, confirmed })
}

pub fn aggregate_dataset(store: &Store, dataset: &str, mode: AggregationMode) -> Result<AggregateView> {
    let ds = store.dataset(dataset)?;
    let mut warnings = Vec::new();
    let results =
        NoiseType::ALL.iter().map(|&t| confirmed_for(store, &ds, t, mode, &mut warnings)).collect::<Result<_>>()?;
    Ok(AggregateView { dataset: dataset.to_string(), mode, results, warnings })
}

/// Builds the cleaned list from aggregated confirmations without writing it.
pub fn compute_clean(store: &Store, dataset: &str, mode: AggregationMode, seed: u64) -> Result<CleanReport> {
    let view = aggregate_dataset(store, dataset, mode)?;
    let ds = store.dataset(dataset)?;
    let of = |t: NoiseType| view.results.iter().find(|r| r.noise_type == t).expect("all noise types aggregated");
    let irrelevant: Vec<&str> = of(NoiseType::Irrelevant).confirmed.iter().map(|ids| ids[0].as_str()).collect();
    let pairs: Vec<(&str, &str)> =
        of(NoiseType::NearDuplicate).confirmed.iter().map(|ids| (ids[0].as_str(), ids[1].as_str())).collect();
    let label_errors = of(NoiseType::LabelError).confirmed.len();
    let mut report = build_clean_list(ds.manifest(), mode, &irrelevant, &pairs, seed)?.with_label_errors(label_errors);
    report.warnings.extend(view.warnings);
    Ok(report)
}

/// Paths written by [`clean`].
pub fn clean_paths(ds: &Dataset, mode: AggregationMode) -> (PathBuf, PathBuf) {
    let dir = ds.dir().join("clean");
    (dir.join(format!("cleaned_{}.txt", mode.as_str())), dir.join(format!("report_{}.json", mode.as_str())))
}

/// Computes the cleaned list and writes it with its report under the
/// dataset's `clean/` directory.
pub fn clean(store: &Store, dataset: &str, mode: AggregationMode, seed: u64) -> Result<CleanReport> {
    let report = compute_clean(store, dataset, mode, seed)?;
    let ds = store.dataset(dataset)?;
    let (list, json) = clean_paths(&ds, mode);
    let dir = list.parent().expect("clean dir");
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_clean_list(&list, &report, ds.manifest())?;
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    write_atomic(&json, &bytes)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { reps: DEFAULT_BOOTSTRAP_REPS, level: DEFAULT_CONFIDENCE_LEVEL, seed: 0 }
    }
}

/// A statistic that could be computed, or the reason it could not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgreementEntry {
    Ok(StatsReport),
    Undefined { statistic: String, annotators: Vec<String>, code: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAgreement {
    pub noise_type: NoiseType,
    pub pairs: Vec<AgreementEntry>,
    pub overall: Option<AgreementEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementView {
    pub dataset: String,
    pub results: Vec<NoiseAgreement>,
}

fn entry(
    statistic: &str,
    annotators: Vec<String>,
    items: usize,
    opts: BootstrapOptions,
    result: std::result::Result<dqclean_core::stats::BootstrapResult, dqclean_core::stats::StatsError>,
) -> AgreementEntry {
    match result {
        Ok(b) => AgreementEntry::Ok(StatsReport {
            statistic: statistic.to_string(),
            point: b.point,
            ci: Some([b.ci_low, b.ci_high]),
            band: agreement_band(b.point).ok(),
            reps: b.reps,
            seed: opts.seed,
            annotators,
            items,
            skipped: b.skipped,
        }),
        Err(e) => {
            let e = Error::Stats(e);
            AgreementEntry::Undefined {
                statistic: statistic.to_string(),
                annotators,
                code: e.code().to_string(),
                message: e.to_string(),
            }
        }
    }
}

/// Pairwise Cohen's kappa on jointly labelled candidates and Krippendorff's
/// alpha over all candidates, each with a bootstrap interval over candidates.
pub fn agreement(store: &Store, dataset: &str, opts: BootstrapOptions) -> Result<AgreementView> {
    store.dataset(dataset)?;
    let mut results = Vec::new();
    for noise_type in NoiseType::ALL {
        let (logs, _) = annotator_logs(store, dataset, noise_type);
        if logs.len() < 2 {
            continue;
        }
        let table = VerdictTable::from_logs(&logs)?;
        let mut pairs = Vec::new();
        for a in 0..logs.len() {
            for b in (a + 1)..logs.len() {
                let joint: Vec<(Verdict, Verdict)> = table
                    .rows
                    .iter()
                    .filter_map(|(_, cells)| match (cells[a], cells[b]) {
                        (Cell::Unseen, _) | (_, Cell::Unseen) => None,
                        (x, y) => Some((x.effective(), y.effective())),
                    })
                    .collect();
                let kappa = |items: &[(Verdict, Verdict)]| {
                    let (x, y): (Vec<Verdict>, Vec<Verdict>) = items.iter().copied().unzip();
                    cohen_kappa(&x, &y)
                };
                let result = if joint.is_empty() {
                    Err(dqclean_core::stats::StatsError::EmptyInput)
                } else {
                    kappa(&joint).and_then(|_| bootstrap_ci(&joint, kappa, opts.reps, opts.level, opts.seed))
                };
                let names = vec![logs[a].annotator.clone(), logs[b].annotator.clone()];
                pairs.push(entry("cohen_kappa", names, joint.len(), opts, result));
            }
        }
        let units: Vec<Vec<Option<Verdict>>> = table
            .rows
            .iter()
            .map(|(_, cells)| cells.iter().map(|c| (*c != Cell::Unseen).then(|| c.effective())).collect())
            .collect();
        let alpha = |u: &[Vec<Option<Verdict>>]| krippendorff_alpha(u);
        let result = alpha(&units).and_then(|_| bootstrap_ci(&units, alpha, opts.reps, opts.level, opts.seed));
        let names = logs.iter().map(|l| l.annotator.clone()).collect();
        let overall = Some(entry("krippendorff_alpha", names, units.len(), opts, result));
        results.push(NoiseAgreement { noise_type, pairs, overall });
    }
    Ok(AgreementView { dataset: dataset.to_string(), results })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateView {
    pub dataset: String,
    pub mode: AggregationMode,
    pub items: usize,
    pub removed: usize,
    pub reports: Vec<DeltaReport>,
}

/// Before/after cleaning deltas for externally produced model scores.
/// Items are matched to the cleaned list by id; ids outside the manifest
/// are kept.
pub fn evaluate(
    store: &Store,
    dataset: &str,
    scores: &Path,
    mode: AggregationMode,
    clean_seed: u64,
    opts: BootstrapOptions,
) -> Result<EvaluateView> {
    let ds = store.dataset(dataset)?;
    let set = read_scores(scores)?;
    let report = compute_clean(store, dataset, mode, clean_seed)?;
    let kept: BTreeSet<&str> = report.cleaned_ids.iter().map(String::as_str).collect();
    let removed: BTreeSet<String> = set
        .items()
        .iter()
        .filter(|i| ds.manifest().index_of(&i.id).is_some() && !kept.contains(i.id.as_str()))
        .map(|i| i.id.clone())
        .collect();
    let reports = cleaning_delta(&set, &removed, &MetricKind::ALL, opts.reps, opts.level, opts.seed)?;
    Ok(EvaluateView { dataset: dataset.to_string(), mode, items: set.len(), removed: removed.len(), reports })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityView {
    pub session_id: String,
    pub pool_size: u64,
    pub annotated: usize,
    pub points: Vec<SweepPoint>,
}

/// Parses `p_chance:p_plus` pairs separated by commas.
pub fn parse_grid(s: &str) -> Result<Vec<(f64, f64)>> {
    let bad = || Error::InvalidRequest(format!("grid `{s}` must look like `0.05:0.05,0.1:0.05`"));
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

pub fn sensitivity(store: &Store, session_id: &str, grid: Option<&[(f64, f64)]>) -> Result<SensitivityView> {
    let snap = store.snapshot(session_id)?;
    let s = &snap.session;
    let verdicts: Vec<Verdict> = s.verdicts().iter().map(|(_, v)| *v).collect();
    let default_grid;
    let grid = match grid {
        Some(g) => g,
        None => {
            default_grid = default_sweep_grid();
            &default_grid
        }
    };
    let points = sensitivity_sweep(&verdicts, s.pool_size(), grid, s.params().rounding())?;
    Ok(SensitivityView {
        session_id: session_id.to_string(),
        pool_size: s.pool_size(),
        annotated: verdicts.len(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLine {
    pub session_id: String,
    pub annotator: String,
    pub status: SessionStatus,
    pub annotated: usize,
    pub confirmed: usize,
    pub fraction_annotated: f64,
    pub speed_up: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub noise_type: NoiseType,
    pub pool_size: u64,
    pub sessions: Vec<SessionLine>,
    pub confirmed_majority: usize,
    pub confirmed_unanimous: usize,
    /// Confirmed count under the report's mode, as a percentage of N.
    pub confirmed_percent: f64,
    /// Ranking scored against unanimous labels on candidates every
    /// annotator saw.
    pub ranking_quality: Option<RankingQuality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking_quality_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub dataset: DatasetSummary,
    pub mode: AggregationMode,
    pub noise_types: Vec<NoiseReport>,
    pub agreement: AgreementView,
    pub clean: CleanReport,
}

/// Everything the CLI `report` command prints: per noise type session
/// economics, confirmed counts under both modes, ranking quality and
/// agreement, plus the cleaned list summary.
pub fn report(
    store: &Store,
    dataset: &str,
    mode: AggregationMode,
    seed: u64,
    opts: BootstrapOptions,
) -> Result<DatasetReport> {
    let ds = store.dataset(dataset)?;
    let n = ds.manifest().len();
    let mut noise_types = Vec::new();
    for noise_type in NoiseType::ALL {
        let sessions: Vec<SessionLine> = store
            .sessions_for(dataset, Some(noise_type))
            .into_iter()
            .map(|snap| {
                let s = snap.session;
                let annotated = s.verdicts().len();
                SessionLine {
                    session_id: s.session_id().to_string(),
                    annotator: s.annotator_id().to_string(),
                    status: s.status(),
                    annotated,
                    confirmed: s.confirmed().count(),
                    fraction_annotated: s.fraction_annotated(),
                    speed_up: speed_up(s.pool_size(), annotated as u64).ok().map(|x| x.factor()),
                }
            })
            .collect();
        let (logs, _) = annotator_logs(store, dataset, noise_type);
        let (mut majority, mut unanimous, mut quality, mut quality_error) = (0, 0, None, None);
        if !logs.is_empty() {
            let table = VerdictTable::from_logs(&logs)?;
            majority = table.confirmed(AggregationMode::Majority).len();
            unanimous = table.confirmed(AggregationMode::Unanimous).len();
            let confirmed: BTreeSet<_> = table.confirmed(AggregationMode::Unanimous).into_iter().collect();
            let reference: BTreeMap<_, bool> = table.fully_seen().map(|(c, _)| (*c, confirmed.contains(c))).collect();
            if let Some(stored) = ds.ranking(noise_type) {
                match ranking_vs_reference(&stored.ranking, &reference) {
                    Ok(q) => quality = Some(q),
                    Err(e) => quality_error = Some(Error::Eval(e).code().to_string()),
                }
            }
        }
        let selected = if mode == AggregationMode::Majority { majority } else { unanimous };
        noise_types.push(NoiseReport {
            noise_type,
            pool_size: noise_type.pool_size(n),
            sessions,
            confirmed_majority: majority,
            confirmed_unanimous: unanimous,
            confirmed_percent: 100.0 * selected as f64 / n as f64,
            ranking_quality: quality,
            ranking_quality_error: quality_error,
        });
    }
    Ok(DatasetReport {
        dataset: ds.summary(),
        mode,
        noise_types,
        agreement: agreement(store, dataset, opts)?,
        clean: compute_clean(store, dataset, mode, seed)?,
    })
}
