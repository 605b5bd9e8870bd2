use std::path::Path;

use dqclean_core::aggregate::CleanReport;
use dqclean_core::data::DatasetManifest;
use dqclean_core::stats::AgreementBand;
use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::Result;

/// Cleaned file list: one path per line, manifest order.
pub fn write_clean_list(path: &Path, report: &CleanReport, manifest: &DatasetManifest) -> Result<()> {
    let mut out = String::new();
    for id in &report.cleaned_ids {
        let index = manifest.index_of(id).expect("cleaned ids come from the manifest");
        out.push_str(&manifest.samples()[index].path);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// A statistic with its bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub statistic: String,
    pub point: f64,
    pub ci: Option<[f64; 2]>,
    pub band: Option<AgreementBand>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotators: Vec<String>,
    #[serde(default)]
    pub items: usize,
    #[serde(default)]
    pub skipped: usize,
}
