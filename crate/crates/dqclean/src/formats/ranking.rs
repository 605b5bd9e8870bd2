use std::io::{BufRead, Write};
use std::path::Path;

use dqclean_core::data::DatasetManifest;
use dqclean_core::rank::{CandidateKind, CandidateRef, IssueRanking, NoiseType, RankedCandidate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a ranking file. `rank` starts at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub rank: usize,
    pub kind: CandidateKind,
    pub ids: Vec<String>,
    pub score: f64,
}

pub fn write_ranking(mut out: impl Write, ranking: &IssueRanking, manifest: &DatasetManifest) -> std::io::Result<()> {
    for (k, entry) in ranking.entries().iter().enumerate() {
        let record = RankingRecord {
            rank: k + 1,
            kind: entry.candidate.kind(),
            ids: entry.candidate.indices().map(|i| manifest.samples()[i].id.clone()).collect(),
            score: entry.score,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_ranking(
    reader: impl BufRead,
    noise_type: NoiseType,
    manifest: &DatasetManifest,
    origin: &Path,
) -> Result<IssueRanking> {
    let parse = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };
    let expected_kind = match noise_type {
        NoiseType::NearDuplicate => CandidateKind::Pair,
        _ => CandidateKind::Single,
    };
    let mut entries = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RankingRecord = serde_json::from_str(&line).map_err(|e| parse(k + 1, e.to_string()))?;
        if record.rank != entries.len() + 1 {
            return Err(parse(k + 1, format!("rank {} out of sequence", record.rank)));
        }
        if record.kind != expected_kind {
            return Err(parse(k + 1, format!("{:?} candidate in a {noise_type} ranking", record.kind)));
        }
        let index = |id: &String| manifest.index_of(id).ok_or_else(|| Error::UnknownId(id.clone()));
        let candidate = match (record.kind, record.ids.as_slice()) {
            (CandidateKind::Single, [a]) => CandidateRef::single(index(a)?),
            (CandidateKind::Pair, [a, b]) if a != b => CandidateRef::pair(index(a)?, index(b)?),
            _ => return Err(parse(k + 1, "ids do not fit the candidate kind".into())),
        };
        entries.push(RankedCandidate { candidate, score: record.score });
    }
    Ok(IssueRanking::from_entries(noise_type, entries))
}
