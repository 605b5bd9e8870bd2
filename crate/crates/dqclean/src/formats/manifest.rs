use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use dqclean_core::data::{DatasetManifest, SampleRecord};

use crate::error::{Error, Result};

/// Loads a JSONL manifest, one `{"id", "path", "label"}` object per line.
/// Blank lines are ignored.
pub fn read_manifest(name: &str, path: &Path) -> Result<DatasetManifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(name, BufReader::new(file), path)
}

pub fn parse_manifest(name: &str, reader: impl BufRead, origin: &Path) -> Result<DatasetManifest> {
    let mut samples = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: k + 1,
            message: e.to_string(),
        })?;
        samples.push(record);
    }
    Ok(DatasetManifest::new(name, samples)?)
}

pub fn write_manifest(mut out: impl Write, manifest: &DatasetManifest) -> std::io::Result<()> {
    for sample in manifest.samples() {
        serde_json::to_writer(&mut out, sample)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
