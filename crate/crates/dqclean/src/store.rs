//! Persistent registry of datasets, rankings and annotation sessions.
//!
//! Layout under the data directory:
//!
//! ```text
//! datasets/<name>/dataset.json        metadata
//! datasets/<name>/manifest.jsonl      copy of the ingested manifest
//! datasets/<name>/embeddings.scem     embeddings in SCEM form
//! datasets/<name>/rankings.json       noise type -> metric index
//! datasets/<name>/rankings/<t>.jsonl  rankings
//! datasets/<name>/clean/              cleaned file lists and reports
//! sessions/<id>.jsonl                 append-only session logs
//! ```
//!
//! Dataset files are written once. Session logs only grow, and every append
//! is synced before the caller sees its result, so reopening the store
//! replays exactly the acknowledged history.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use chrono::{DateTime, Utc};
use dqclean_core::data::{pairwise_distance, DatasetManifest, DistanceMatrix, EmbeddingMatrix, Metric};
use dqclean_core::protocol::{
    AnnotationSession, NextCandidate, Rounding, SessionStatus, StoppingParams, Verdict, DEFAULT_P_CHANCE,
    DEFAULT_P_PLUS,
};
use dqclean_core::rank::{
    rank_irrelevant, rank_label_errors, rank_near_duplicates, CandidateKind, CandidateRef, IssueRanking,
    LabelErrorConfig, NoiseType,
};
use serde::{Deserialize, Serialize};

use crate::embed::baseline_embed;
use crate::error::{Error, Result};
use crate::formats::{
    encode_scem, event_to_record, read_embeddings, read_log, read_manifest, read_ranking, repair_torn_tail, replay_log,
    sync_parent, write_atomic, write_manifest, write_ranking, EventLogWriter,
};

/// Stopping parameters applied when a session request leaves them out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionDefaults {
    pub p_plus: f64,
    pub p_chance: f64,
    pub rounding: Rounding,
}

impl Default for SessionDefaults {
    fn default() -> Self {
        Self { p_plus: DEFAULT_P_PLUS, p_chance: DEFAULT_P_CHANCE, rounding: Rounding::Floor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingSource {
    File { path: PathBuf },
    Baseline { side: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub normalized: bool,
    pub image_dir: PathBuf,
    pub source: EmbeddingSource,
    pub created: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterDataset {
    pub name: String,
    pub manifest: PathBuf,
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    /// Side length for the pixel baseline embedder.
    #[serde(default)]
    pub baseline: Option<u32>,
    /// Directory that manifest paths are relative to. Defaults to the
    /// manifest's directory.
    #[serde(default)]
    pub image_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct StoredRanking {
    pub metric: Metric,
    pub ranking: Arc<IssueRanking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSummary {
    pub dataset: String,
    pub noise_type: NoiseType,
    pub metric: Metric,
    pub len: usize,
    pub pool_size: u64,
}

#[derive(Debug)]
pub struct Dataset {
    meta: DatasetMeta,
    dir: PathBuf,
    manifest: DatasetManifest,
    embeddings: EmbeddingMatrix,
    distances: Mutex<BTreeMap<Metric, Arc<DistanceMatrix>>>,
    rankings: RwLock<BTreeMap<NoiseType, StoredRanking>>,
    // Serializes ranking changes against session creation.
    rank_lock: Mutex<()>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Dataset {
    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.embeddings
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary { name: self.meta.name.clone(), n: self.meta.n, d: self.meta.d }
    }

    /// Distance matrix for `metric`, computed on first use.
    pub fn distances(&self, metric: Metric) -> Result<Arc<DistanceMatrix>> {
        let mut cache = lock(&self.distances);
        if let Some(d) = cache.get(&metric) {
            return Ok(d.clone());
        }
        let d = Arc::new(pairwise_distance(&self.embeddings, metric)?);
        cache.insert(metric, d.clone());
        Ok(d)
    }

    pub fn ranking(&self, noise_type: NoiseType) -> Option<StoredRanking> {
        self.rankings.read().unwrap_or_else(|e| e.into_inner()).get(&noise_type).cloned()
    }

    pub fn ranked_types(&self) -> Vec<NoiseType> {
        self.rankings.read().unwrap_or_else(|e| e.into_inner()).keys().copied().collect()
    }

    /// Absolute path of a sample's image.
    pub fn image_path(&self, id: &str) -> Option<PathBuf> {
        let i = self.manifest.index_of(id)?;
        Some(self.meta.image_dir.join(&self.manifest.samples()[i].path))
    }

    pub fn candidate_ids(&self, candidate: &CandidateRef) -> Vec<String> {
        candidate.indices().map(|i| self.manifest.samples()[i].id.clone()).collect()
    }

    /// Resolves one id (single) or two ids (pair) to a candidate.
    pub fn resolve_candidate(&self, ids: &[String]) -> Result<CandidateRef> {
        let index = |id: &String| self.manifest.index_of(id).ok_or_else(|| Error::UnknownId(id.clone()));
        match ids {
            [a] => Ok(CandidateRef::single(index(a)?)),
            [a, b] if a != b => Ok(CandidateRef::pair(index(a)?, index(b)?)),
            _ => Err(Error::InvalidRequest("a candidate is one id or two distinct ids".into())),
        }
    }

    fn ranking_path(&self, noise_type: NoiseType) -> PathBuf {
        self.dir.join("rankings").join(format!("{}.jsonl", noise_type.as_str()))
    }

    fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("dataset.json");
        let meta: DatasetMeta = read_json(&meta_path)?;
        let manifest = read_manifest(&meta.name, &dir.join("manifest.jsonl"))?;
        let embeddings = read_embeddings(&dir.join("embeddings.scem"), &manifest)?;
        let index_path = dir.join("rankings.json");
        let index: BTreeMap<NoiseType, Metric> =
            if index_path.exists() { read_json(&index_path)? } else { BTreeMap::new() };
        let dataset = Self {
            meta,
            dir: dir.to_path_buf(),
            manifest,
            embeddings,
            distances: Mutex::new(BTreeMap::new()),
            rankings: RwLock::new(BTreeMap::new()),
            rank_lock: Mutex::new(()),
        };
        let mut rankings = BTreeMap::new();
        for (noise_type, metric) in index {
            let path = dataset.ranking_path(noise_type);
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let ranking = read_ranking(BufReader::new(file), noise_type, &dataset.manifest, &path)?;
            rankings.insert(noise_type, StoredRanking { metric, ranking: Arc::new(ranking) });
        }
        *dataset.rankings.write().unwrap_or_else(|e| e.into_inner()) = rankings;
        Ok(dataset)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn to_json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("metadata serializes");
    bytes.push(b'\n');
    bytes
}

/// Names end up as file names, so they are kept to a safe alphabet.
pub fn validate_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidName(name.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewSession {
    pub dataset: String,
    pub noise_type: NoiseType,
    pub annotator: String,
    #[serde(default)]
    pub p_plus: Option<f64>,
    #[serde(default)]
    pub p_chance: Option<f64>,
    #[serde(default)]
    pub rounding: Option<Rounding>,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub n_clean: u64,
    pub status: SessionStatus,
}

/// What an annotator sees. Deliberately carries no rank, score or streak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub kind: CandidateKind,
    pub ids: Vec<String>,
    pub image_urls: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NextView {
    Candidate { candidate: CandidateView, question: String },
    Terminal { status: SessionStatus },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerAck {
    pub status: SessionStatus,
    pub annotated_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub annotator: String,
    pub dataset: String,
    pub noise_type: NoiseType,
    pub question: String,
    pub status: SessionStatus,
    pub annotated_count: usize,
    pub confirmed_count: usize,
    pub pool_size: u64,
    pub p_plus: f64,
    pub p_chance: f64,
    pub n_clean: u64,
    pub started: DateTime<Utc>,
}

/// A point-in-time copy of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSnapshot {
    pub session: AnnotationSession,
    pub started: DateTime<Utc>,
}

#[derive(Debug)]
struct LiveSession {
    session: AnnotationSession,
    dataset: Arc<Dataset>,
    started: DateTime<Utc>,
    log: EventLogWriter,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    defaults: SessionDefaults,
    datasets: RwLock<BTreeMap<String, Arc<Dataset>>>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<LiveSession>>>>,
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

/// URL under which the service serves a sample's image.
pub fn image_url(dataset: &str, id: &str) -> String {
    format!("/images/{}?dataset={}", percent_encode(id), percent_encode(dataset))
}

impl Store {
    /// Opens (or initializes) a data directory, replaying every session log.
    /// Refuses to open if any log is damaged.
    pub fn open(root: impl Into<PathBuf>, defaults: SessionDefaults) -> Result<Self> {
        let root = root.into();
        for sub in ["datasets", "sessions"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let store =
            Self { root, defaults, datasets: RwLock::new(BTreeMap::new()), sessions: RwLock::new(BTreeMap::new()) };
        let mut datasets = BTreeMap::new();
        for dir in sorted_entries(&store.root.join("datasets"))? {
            let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            if name.starts_with('.') || !dir.is_dir() {
                continue;
            }
            let dataset = Dataset::load(&dir)?;
            datasets.insert(name, Arc::new(dataset));
        }
        let mut sessions = BTreeMap::new();
        for path in sorted_entries(&store.root.join("sessions"))? {
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let live = load_session(&path, &datasets)?;
            sessions.insert(live.session.session_id().to_string(), Arc::new(Mutex::new(live)));
        }
        log::info!("opened {} with {} datasets and {} sessions", store.root.display(), datasets.len(), sessions.len());
        *store.datasets.write().unwrap_or_else(|e| e.into_inner()) = datasets;
        *store.sessions.write().unwrap_or_else(|e| e.into_inner()) = sessions;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn defaults(&self) -> SessionDefaults {
        self.defaults
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.jsonl"))
    }

    pub fn dataset(&self, name: &str) -> Result<Arc<Dataset>> {
        self.datasets
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownDataset(name.to_string()))
    }

    pub fn datasets(&self) -> Vec<DatasetSummary> {
        self.datasets.read().unwrap_or_else(|e| e.into_inner()).values().map(|d| d.summary()).collect()
    }

    /// Ingests a manifest plus embeddings (from a file or the pixel baseline)
    /// into an immutable dataset directory.
    pub fn register_dataset(&self, req: &RegisterDataset) -> Result<DatasetSummary> {
        validate_name(&req.name)?;
        let manifest = read_manifest(&req.name, &req.manifest)?;
        let image_dir = match &req.image_dir {
            Some(dir) => dir.clone(),
            None => req.manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        let image_dir = if image_dir.as_os_str().is_empty() { PathBuf::from(".") } else { image_dir };
        let image_dir = image_dir.canonicalize().map_err(|e| Error::io(&image_dir, e))?;
        let (embeddings, source) = match (&req.embeddings, req.baseline) {
            (Some(path), None) => {
                let abs = path.canonicalize().map_err(|e| Error::io(path, e))?;
                (read_embeddings(path, &manifest)?, EmbeddingSource::File { path: abs })
            }
            (None, Some(side)) => (baseline_embed(&manifest, &image_dir, side)?, EmbeddingSource::Baseline { side }),
            _ => return Err(Error::InvalidRequest("give exactly one of `embeddings` or `baseline`".into())),
        };

        let mut registry = self.datasets.write().unwrap_or_else(|e| e.into_inner());
        let dir = self.root.join("datasets").join(&req.name);
        if registry.contains_key(&req.name) || dir.exists() {
            return Err(Error::DatasetExists(req.name.clone()));
        }
        let meta = DatasetMeta {
            name: req.name.clone(),
            n: embeddings.n(),
            d: embeddings.d(),
            normalized: embeddings.is_normalized(),
            image_dir,
            source,
            created: Utc::now(),
        };
        // Build under a hidden name, then rename into place.
        let staging = self.root.join("datasets").join(format!(".{}.{}", req.name, uuid::Uuid::new_v4().simple()));
        let build = || -> Result<()> {
            fs::create_dir_all(staging.join("rankings")).map_err(|e| Error::io(&staging, e))?;
            let mut manifest_bytes = Vec::new();
            write_manifest(&mut manifest_bytes, &manifest).map_err(|e| Error::io(&staging, e))?;
            write_atomic(&staging.join("manifest.jsonl"), &manifest_bytes)?;
            write_atomic(&staging.join("embeddings.scem"), &encode_scem(&embeddings))?;
            write_atomic(&staging.join("dataset.json"), &to_json_pretty(&meta))?;
            fs::rename(&staging, &dir).map_err(|e| Error::io(&dir, e))?;
            sync_parent(&dir)
        };
        if let Err(e) = build() {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
        let dataset = Dataset {
            meta,
            dir,
            manifest,
            embeddings,
            distances: Mutex::new(BTreeMap::new()),
            rankings: RwLock::new(BTreeMap::new()),
            rank_lock: Mutex::new(()),
        };
        let summary = dataset.summary();
        log::info!("registered dataset {} (n = {}, d = {})", summary.name, summary.n, summary.d);
        registry.insert(req.name.clone(), Arc::new(dataset));
        Ok(summary)
    }

    /// Computes and stores a ranking. Recomputing with the same metric is a
    /// no-op; switching metric is refused once sessions depend on it.
    pub fn rank(&self, dataset: &str, noise_type: NoiseType, metric: Metric) -> Result<RankingSummary> {
        let ds = self.dataset(dataset)?;
        let _guard = lock(&ds.rank_lock);
        let summary = |len: usize| RankingSummary {
            dataset: dataset.to_string(),
            noise_type,
            metric,
            len,
            pool_size: noise_type.pool_size(ds.manifest.len()),
        };
        if let Some(existing) = ds.ranking(noise_type) {
            if existing.metric == metric {
                return Ok(summary(existing.ranking.len()));
            }
            let in_use = self.sessions.read().unwrap_or_else(|e| e.into_inner()).values().any(|s| {
                let s = lock(s);
                s.session.dataset() == dataset && s.session.noise_type() == noise_type
            });
            if in_use {
                return Err(Error::RankingLocked { dataset: dataset.to_string(), noise_type });
            }
        }
        let dist = ds.distances(metric)?;
        let ranking = match noise_type {
            NoiseType::Irrelevant => rank_irrelevant(&dist)?,
            NoiseType::NearDuplicate => rank_near_duplicates(&dist)?,
            NoiseType::LabelError => {
                let labels: Vec<Option<&str>> = ds.manifest.samples().iter().map(|s| s.label.as_deref()).collect();
                rank_label_errors(&dist, &labels, LabelErrorConfig::default())?
            }
        };
        let mut bytes = Vec::new();
        write_ranking(&mut bytes, &ranking, &ds.manifest).map_err(|e| Error::io(&ds.dir, e))?;
        write_atomic(&ds.ranking_path(noise_type), &bytes)?;

        let mut rankings = ds.rankings.write().unwrap_or_else(|e| e.into_inner());
        let mut index: BTreeMap<NoiseType, Metric> = rankings.iter().map(|(k, v)| (*k, v.metric)).collect();
        index.insert(noise_type, metric);
        write_atomic(&ds.dir.join("rankings.json"), &to_json_pretty(&index))?;
        let len = ranking.len();
        rankings.insert(noise_type, StoredRanking { metric, ranking: Arc::new(ranking) });
        log::info!("ranked {dataset}/{noise_type} with {metric}: {len} candidates");
        Ok(summary(len))
    }

    pub fn create_session(&self, req: &NewSession) -> Result<SessionCreated> {
        if req.annotator.trim().is_empty() {
            return Err(Error::InvalidRequest("annotator must not be empty".into()));
        }
        let ds = self.dataset(&req.dataset)?;
        let _guard = lock(&ds.rank_lock);
        let stored = ds
            .ranking(req.noise_type)
            .ok_or_else(|| Error::RankingMissing { dataset: req.dataset.clone(), noise_type: req.noise_type })?;
        let params = StoppingParams::with_rounding(
            req.p_plus.unwrap_or(self.defaults.p_plus),
            req.p_chance.unwrap_or(self.defaults.p_chance),
            req.rounding.unwrap_or(self.defaults.rounding),
        )?;
        let id = match &req.session_id {
            Some(id) => id.clone(),
            None => uuid::Uuid::new_v4().simple().to_string(),
        };
        validate_name(&id)?;
        let (session, events) =
            AnnotationSession::start(id.clone(), req.annotator.clone(), req.dataset.clone(), stored.ranking, params)?;
        let started = Utc::now();
        let records: Vec<_> = events.iter().map(|e| event_to_record(e, &id, &ds.manifest, started)).collect();

        let mut sessions = self.sessions.write().unwrap_or_else(|e| e.into_inner());
        let path = self.session_path(&id);
        if sessions.contains_key(&id) || path.exists() {
            return Err(Error::SessionExists(id));
        }
        let log = EventLogWriter::create(&path, &records)?;
        let created = SessionCreated { session_id: id.clone(), n_clean: params.n_clean(), status: session.status() };
        log::info!("session {id} started by {} on {}/{}", req.annotator, req.dataset, req.noise_type);
        sessions.insert(id, Arc::new(Mutex::new(LiveSession { session, dataset: ds.clone(), started, log })));
        Ok(created)
    }

    fn live(&self, id: &str) -> Result<Arc<Mutex<LiveSession>>> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownSession(id.to_string()))
    }

    pub fn next(&self, id: &str) -> Result<NextView> {
        let live = self.live(id)?;
        let live = lock(&live);
        Ok(match live.session.next_candidate() {
            NextCandidate::Terminal(status) => NextView::Terminal { status },
            NextCandidate::Candidate(candidate) => {
                let ds = &live.dataset;
                let ids = ds.candidate_ids(&candidate);
                let label = match live.session.noise_type() {
                    NoiseType::LabelError => ds.manifest.samples()[candidate.first()].label.clone(),
                    _ => None,
                };
                NextView::Candidate {
                    candidate: CandidateView {
                        kind: candidate.kind(),
                        image_urls: ids.iter().map(|i| image_url(ds.name(), i)).collect(),
                        ids,
                        label,
                    },
                    question: live.session.question().to_string(),
                }
            }
        })
    }

    /// Validates, durably logs, then applies an answer.
    pub fn answer(&self, id: &str, ids: &[String], verdict: Verdict) -> Result<AnswerAck> {
        let live = self.live(id)?;
        let mut live = lock(&live);
        let candidate = live.dataset.resolve_candidate(ids)?;
        let events = live.session.plan_answer(candidate, verdict)?;
        let now = Utc::now();
        let records: Vec<_> = events.iter().map(|e| event_to_record(e, id, &live.dataset.manifest, now)).collect();
        live.log.append(&records)?;
        for event in &events {
            live.session.apply(event).expect("planned events apply");
        }
        Ok(AnswerAck { status: live.session.status(), annotated_count: live.session.verdicts().len() })
    }

    pub fn status(&self, id: &str) -> Result<SessionView> {
        let live = self.live(id)?;
        let live = lock(&live);
        let s = &live.session;
        Ok(SessionView {
            session_id: s.session_id().to_string(),
            annotator: s.annotator_id().to_string(),
            dataset: s.dataset().to_string(),
            noise_type: s.noise_type(),
            question: s.question().to_string(),
            status: s.status(),
            annotated_count: s.verdicts().len(),
            confirmed_count: s.confirmed().count(),
            pool_size: s.pool_size(),
            p_plus: s.params().p_plus(),
            p_chance: s.params().p_chance(),
            n_clean: s.params().n_clean(),
            started: live.started,
        })
    }

    pub fn snapshot(&self, id: &str) -> Result<SessionSnapshot> {
        let live = self.live(id)?;
        let live = lock(&live);
        Ok(SessionSnapshot { session: live.session.clone(), started: live.started })
    }

    pub fn session_log_path(&self, id: &str) -> Result<PathBuf> {
        let live = self.live(id)?;
        let path = lock(&live).log.path().to_path_buf();
        Ok(path)
    }

    /// Sessions on a dataset, optionally of one noise type, oldest first.
    pub fn sessions_for(&self, dataset: &str, noise_type: Option<NoiseType>) -> Vec<SessionSnapshot> {
        let sessions = self.sessions.read().unwrap_or_else(|e| e.into_inner());
        let mut out: Vec<SessionSnapshot> = sessions
            .values()
            .filter_map(|s| {
                let s = lock(s);
                let matches = s.session.dataset() == dataset && noise_type.is_none_or(|t| s.session.noise_type() == t);
                matches.then(|| SessionSnapshot { session: s.session.clone(), started: s.started })
            })
            .collect();
        out.sort_by(|a, b| a.started.cmp(&b.started).then_with(|| a.session.session_id().cmp(b.session.session_id())));
        out
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

fn load_session(path: &Path, datasets: &BTreeMap<String, Arc<Dataset>>) -> Result<LiveSession> {
    let torn = repair_torn_tail(path)?;
    if torn > 0 {
        log::warn!("{}: dropped {torn} bytes of an unacknowledged record", path.display());
    }
    let records = read_log(path)?;
    let (offset, start) = &records[0];
    let corrupt = |reason: String| Error::CorruptLog { path: path.to_path_buf(), offset: *offset, reason };
    let (Some(name), Some(noise_type)) = (&start.dataset, start.noise_type) else {
        return Err(corrupt("log does not begin with a start record".into()));
    };
    let dataset = datasets.get(name).ok_or_else(|| corrupt(format!("unknown dataset `{name}`")))?;
    let stored =
        dataset.ranking(noise_type).ok_or_else(|| corrupt(format!("dataset `{name}` has no {noise_type} ranking")))?;
    let session = replay_log(path, &records, &dataset.manifest, stored.ranking)?;
    if path.file_stem().and_then(|s| s.to_str()) != Some(session.session_id()) {
        return Err(corrupt(format!("file name does not match session `{}`", session.session_id())));
    }
    Ok(LiveSession { session, dataset: dataset.clone(), started: start.ts, log: EventLogWriter::open(path)? })
}
