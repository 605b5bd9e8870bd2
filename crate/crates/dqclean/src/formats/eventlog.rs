//! Append-only JSONL session logs.
//!
//! Every line is one event. A line is only considered written once it ends
//! in `\n` and the file has been synced; a missing newline at the end of the
//! file marks a write that was interrupted and is reported as corruption at
//! the offset where that line starts.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use dqclean_core::data::DatasetManifest;
use dqclean_core::protocol::{
    AnnotationSession, Rounding, SessionEvent, SessionStart, SessionStatus, StoppingParams, Verdict,
};
use dqclean_core::rank::{CandidateRef, IssueRanking, NoiseType};
use serde::{Deserialize, Serialize};

use super::sync_parent;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Start,
    Answer,
    Stop,
    Amend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub ts: DateTime<Utc>,
    pub session: String,
    pub event: EventKind,
    pub candidate: Option<Vec<String>>,
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_type: Option<NoiseType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_chance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<Rounding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_clean: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<SessionStatus>,
}

impl LogRecord {
    fn bare(ts: DateTime<Utc>, session: &str, event: EventKind) -> Self {
        Self {
            ts,
            session: session.to_string(),
            event,
            candidate: None,
            verdict: None,
            annotator: None,
            dataset: None,
            noise_type: None,
            p_plus: None,
            p_chance: None,
            rounding: None,
            n_clean: None,
            ranking_len: None,
            status: None,
        }
    }
}

fn candidate_ids(candidate: &CandidateRef, manifest: &DatasetManifest) -> Vec<String> {
    candidate.indices().map(|i| manifest.samples()[i].id.clone()).collect()
}

pub fn event_to_record(
    event: &SessionEvent,
    session: &str,
    manifest: &DatasetManifest,
    ts: DateTime<Utc>,
) -> LogRecord {
    match event {
        SessionEvent::Start(start) => LogRecord {
            annotator: Some(start.annotator_id.clone()),
            dataset: Some(start.dataset.clone()),
            noise_type: Some(start.noise_type),
            p_plus: Some(start.params.p_plus()),
            p_chance: Some(start.params.p_chance()),
            rounding: Some(start.params.rounding()),
            n_clean: Some(start.params.n_clean()),
            ranking_len: Some(start.ranking_len),
            ..LogRecord::bare(ts, session, EventKind::Start)
        },
        SessionEvent::Answer { candidate, verdict } => LogRecord {
            candidate: Some(candidate_ids(candidate, manifest)),
            verdict: Some(*verdict),
            ..LogRecord::bare(ts, session, EventKind::Answer)
        },
        SessionEvent::Stop { status } => {
            LogRecord { status: Some(*status), ..LogRecord::bare(ts, session, EventKind::Stop) }
        }
        SessionEvent::Amend { candidate, verdict } => LogRecord {
            candidate: Some(candidate_ids(candidate, manifest)),
            verdict: Some(*verdict),
            ..LogRecord::bare(ts, session, EventKind::Amend)
        },
    }
}

pub fn record_to_event(record: &LogRecord, manifest: &DatasetManifest) -> std::result::Result<SessionEvent, String> {
    fn need<T: Clone>(v: &Option<T>, field: &str) -> std::result::Result<T, String> {
        v.clone().ok_or_else(|| format!("missing `{field}`"))
    }
    let candidate = || -> std::result::Result<CandidateRef, String> {
        let ids = need(&record.candidate, "candidate")?;
        let index = |id: &String| manifest.index_of(id).ok_or_else(|| format!("unknown sample id `{id}`"));
        match ids.as_slice() {
            [a] => Ok(CandidateRef::single(index(a)?)),
            [a, b] if a != b => Ok(CandidateRef::pair(index(a)?, index(b)?)),
            _ => Err("candidate must list one id or two distinct ids".into()),
        }
    };
    match record.event {
        EventKind::Start => {
            let rounding = record.rounding.unwrap_or_default();
            let params = StoppingParams::with_rounding(
                need(&record.p_plus, "p_plus")?,
                need(&record.p_chance, "p_chance")?,
                rounding,
            )
            .map_err(|e| e.to_string())?;
            if let Some(n) = record.n_clean {
                if n != params.n_clean() {
                    return Err(format!("recorded n_clean {n} disagrees with parameters ({})", params.n_clean()));
                }
            }
            Ok(SessionEvent::Start(SessionStart {
                session_id: record.session.clone(),
                annotator_id: need(&record.annotator, "annotator")?,
                dataset: need(&record.dataset, "dataset")?,
                noise_type: need(&record.noise_type, "noise_type")?,
                params,
                ranking_len: need(&record.ranking_len, "ranking_len")?,
            }))
        }
        EventKind::Answer => {
            Ok(SessionEvent::Answer { candidate: candidate()?, verdict: need(&record.verdict, "verdict")? })
        }
        EventKind::Stop => Ok(SessionEvent::Stop { status: need(&record.status, "status")? }),
        EventKind::Amend => {
            Ok(SessionEvent::Amend { candidate: candidate()?, verdict: need(&record.verdict, "verdict")? })
        }
    }
}

/// Parses a log file into `(byte offset, record)` pairs.
pub fn read_log(path: &Path) -> Result<Vec<(u64, LogRecord)>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt =
        |offset: usize, reason: String| Error::CorruptLog { path: path.to_path_buf(), offset: offset as u64, reason };
    let mut records = Vec::new();
    let mut offset = 0;
    while offset < bytes.len() {
        let Some(len) = bytes[offset..].iter().position(|b| *b == b'\n') else {
            return Err(corrupt(offset, "truncated record".into()));
        };
        let record: LogRecord =
            serde_json::from_slice(&bytes[offset..offset + len]).map_err(|e| corrupt(offset, e.to_string()))?;
        records.push((offset as u64, record));
        offset += len + 1;
    }
    if records.is_empty() {
        return Err(corrupt(0, "log is empty".into()));
    }
    Ok(records)
}

/// Cuts an incomplete final record left by an interrupted append. Such a
/// record was never acknowledged. Returns the number of bytes removed.
/// Logs without any complete record are left for [`read_log`] to reject.
pub fn repair_torn_tail(path: &Path) -> Result<u64> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.last().is_none_or(|b| *b == b'\n') {
        return Ok(0);
    }
    let Some(end) = bytes.iter().rposition(|b| *b == b'\n').map(|p| p + 1) else {
        return Ok(0);
    };
    let file = OpenOptions::new().write(true).open(path).map_err(|e| Error::io(path, e))?;
    file.set_len(end as u64).map_err(|e| Error::io(path, e))?;
    file.sync_all().map_err(|e| Error::io(path, e))?;
    Ok((bytes.len() - end) as u64)
}

/// Rebuilds a session from parsed records. Any failure is reported as
/// corruption at the offending record.
pub fn replay_log(
    path: &Path,
    records: &[(u64, LogRecord)],
    manifest: &DatasetManifest,
    ranking: Arc<IssueRanking>,
) -> Result<AnnotationSession> {
    let corrupt = |offset: u64, reason: String| Error::CorruptLog { path: path.to_path_buf(), offset, reason };
    let session_id = records.first().map(|(_, r)| r.session.as_str()).unwrap_or_default();
    let mut events = Vec::with_capacity(records.len());
    for (offset, record) in records {
        if record.session != session_id {
            return Err(corrupt(*offset, format!("record belongs to session `{}`", record.session)));
        }
        events.push(record_to_event(record, manifest).map_err(|reason| corrupt(*offset, reason))?);
    }
    AnnotationSession::replay(events, ranking).map_err(|(k, e)| corrupt(records[k].0, e.to_string()))
}

/// Durable appender for one session log.
#[derive(Debug)]
pub struct EventLogWriter {
    path: PathBuf,
    file: File,
    len: u64,
}

fn encode(records: &[LogRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("log records serialize");
        buf.push(b'\n');
    }
    buf
}

impl EventLogWriter {
    /// Creates a new log holding `records`. The file appears under its final
    /// name only once its content is on disk.
    pub fn create(path: &Path, records: &[LogRecord]) -> Result<Self> {
        let buf = encode(records);
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        {
            let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            f.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
            f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        }
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
        sync_parent(path)?;
        Self::open(path)
    }

    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        Ok(Self { path: path.to_path_buf(), file, len })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends and syncs. On failure the file is cut back to its previous
    /// length so a later append does not follow a partial line.
    pub fn append(&mut self, records: &[LogRecord]) -> Result<()> {
        let buf = encode(records);
        let written = self.file.write_all(&buf).and_then(|_| self.file.sync_data());
        if let Err(e) = written {
            let _ = self.file.set_len(self.len);
            return Err(Error::io(&self.path, e));
        }
        self.len += buf.len() as u64;
        Ok(())
    }
}
