use std::fs::File;
use std::io::Read;
use std::path::Path;

use dqclean_core::eval::{ScoredBinarySet, ScoredItem};

use crate::error::{Error, Result};

/// Loads model scores from CSV with header `id,score,label`, label in {0,1}.
pub fn read_scores(path: &Path) -> Result<ScoredBinarySet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scores(file, path)
}

pub fn parse_scores(reader: impl Read, origin: &Path) -> Result<ScoredBinarySet> {
    let parse = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| parse(1, e.to_string()))?;
    if header.iter().map(str::trim).collect::<Vec<_>>() != ["id", "score", "label"] {
        return Err(parse(1, "header must be `id,score,label`".into()));
    }
    let mut items = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| parse(line, e.to_string()))?;
        let score: f64 = record[1].trim().parse().map_err(|_| parse(line, format!("bad score `{}`", &record[1])))?;
        let label = match record[2].trim() {
            "0" => false,
            "1" => true,
            other => return Err(parse(line, format!("label must be 0 or 1, got `{other}`"))),
        };
        items.push(ScoredItem { id: record[0].trim().to_string(), score, label });
    }
    Ok(ScoredBinarySet::new(items)?)
}
