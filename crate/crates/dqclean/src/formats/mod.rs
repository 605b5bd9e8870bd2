//! On-disk formats: manifests, embeddings, rankings, event logs, scores and
//! reports.

mod embeddings;
mod eventlog;
mod manifest;
mod ranking;
mod reports;
mod scores;

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

pub use embeddings::{
    decode_scem, encode_scem, read_embeddings, read_embeddings_csv, write_embeddings_csv, SCEM_MAGIC, SCEM_VERSION,
};
pub use eventlog::{
    event_to_record, read_log, record_to_event, repair_torn_tail, replay_log, EventKind, EventLogWriter, LogRecord,
};
pub use manifest::{parse_manifest, read_manifest, write_manifest};
pub use ranking::{read_ranking, write_ranking, RankingRecord};
pub use reports::{write_clean_list, StatsReport};
pub use scores::{parse_scores, read_scores};

use crate::error::{Error, Result};

/// Writes `bytes` to `path` so that readers see either the old or the new
/// content, never a mix.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let mut file = File::create(tmp).map_err(|e| Error::io(tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(tmp, e))?;
    file.sync_all().map_err(|e| Error::io(tmp, e))?;
    drop(file);
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))?;
    sync_parent(path)
}

/// Flushes the directory entry of `path` so a rename or create survives a crash.
pub fn sync_parent(path: &Path) -> Result<()> {
    #[cfg(unix)]
    if let Some(dir) = path.parent() {
        let dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
        File::open(dir).and_then(|d| d.sync_all()).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}
