//! Dataset manifests, embeddings and the dense distance matrix every ranker
//! consumes.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float;

/// Tolerance on the Euclidean norm of a row for it to count as unit length.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("sample `{0}` has an empty path")]
    EmptyPath(String),
    #[error("sample id must not be empty")]
    EmptyId,
    #[error("dataset `{0}` has no samples")]
    EmptyManifest(String),
    #[error("shape mismatch: expected {expected} rows, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("embedding buffer holds {found} values, expected {n} x {d}")]
    BufferSize { n: usize, d: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("row {0} is the zero vector; cosine distance is undefined")]
    ZeroVector(usize),
    #[error("unknown metric `{0}` (expected `cosine` or `euclidean`)")]
    UnknownMetric(String),
    #[error("distance matrix entry ({i}, {j}) is invalid")]
    InvalidDistance { i: usize, j: usize },
    #[error("cannot resize a {width}x{height} image to side {side}")]
    InvalidResize { width: usize, height: usize, side: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub path: String,
    #[serde(default)]
    pub label: Option<String>,
}

impl SampleRecord {
    pub fn new(id: impl Into<String>, path: impl Into<String>, label: Option<String>) -> Self {
        Self { id: id.into(), path: path.into(), label }
    }
}

/// An ordered, validated list of samples. The order is canonical: embedding
/// rows, distance matrix indices and candidate indices all refer to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    name: String,
    samples: Vec<SampleRecord>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, samples: Vec<SampleRecord>) -> Result<Self, DataError> {
        let name = name.into();
        if samples.is_empty() {
            return Err(DataError::EmptyManifest(name));
        }
        let mut seen = BTreeSet::new();
        for s in &samples {
            if s.id.is_empty() {
                return Err(DataError::EmptyId);
            }
            if s.path.is_empty() {
                return Err(DataError::EmptyPath(s.id.clone()));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(DataError::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self { name, samples })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[SampleRecord] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed manifest; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&SampleRecord> {
        self.samples.get(index)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.samples.iter().position(|s| s.id == id)
    }

    /// Per-sample labels, or the index of the first unlabeled sample.
    pub fn labels(&self) -> Result<Vec<&str>, usize> {
        self.samples.iter().enumerate().map(|(i, s)| s.label.as_deref().ok_or(i)).collect()
    }
}

/// `n x d` row-major embedding matrix aligned to a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    d: usize,
    values: Vec<f32>,
    normalized: bool,
}

impl EmbeddingMatrix {
    /// Validates shape and finiteness. The `normalized` flag is derived by
    /// checking every row, never trusted from the caller.
    pub fn new(n: usize, d: usize, values: Vec<f32>) -> Result<Self, DataError> {
        if values.len() != n * d {
            return Err(DataError::BufferSize { n, d, found: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteValue { row: pos / d.max(1), col: pos % d.max(1) });
        }
        let mut m = Self { n, d, values, normalized: false };
        m.normalized = m.rows_are_unit();
        Ok(m)
    }

    /// Like [`EmbeddingMatrix::new`] but also checks the row count against a
    /// manifest.
    pub fn for_manifest(manifest: &DatasetManifest, n: usize, d: usize, values: Vec<f32>) -> Result<Self, DataError> {
        if n != manifest.len() {
            return Err(DataError::ShapeMismatch { expected: manifest.len(), found: n });
        }
        Self::new(n, d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> + '_ {
        (0..self.n).map(move |i| self.row(i))
    }

    /// Scales every non-zero row to unit length. Zero rows stay zero, in which
    /// case the result is not flagged as normalized.
    pub fn l2_normalized(&self) -> Self {
        let mut values = self.values.clone();
        if self.d > 0 {
            for row in values.chunks_mut(self.d) {
                let norm = norm(row);
                if norm > 0.0 {
                    for v in row.iter_mut() {
                        *v = (f64::from(*v) / norm) as f32;
                    }
                }
            }
        }
        let mut m = Self { n: self.n, d: self.d, values, normalized: false };
        m.normalized = m.rows_are_unit();
        m
    }

    /// Reorders rows: row `k` of the result is row `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for &i in order {
            values.extend_from_slice(self.row(i));
        }
        Self { n: order.len(), d: self.d, values, normalized: self.normalized }
    }

    fn rows_are_unit(&self) -> bool {
        self.n > 0 && self.rows().all(|r| float::abs(norm(r) - 1.0) <= UNIT_NORM_TOLERANCE)
    }
}

fn norm(row: &[f32]) -> f64 {
    float::sqrt(row.iter().map(|&v| f64::from(v) * f64::from(v)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(DataError::UnknownMetric(other.into())),
        }
    }
}

/// Dense symmetric `n x n` matrix of non-negative distances with a zero
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
    metric: Metric,
}

impl DistanceMatrix {
    /// Builds a matrix from a full row-major buffer, checking symmetry, the
    /// zero diagonal and that entries are finite and non-negative.
    pub fn from_entries(n: usize, entries: Vec<f64>, metric: Metric) -> Result<Self, DataError> {
        if entries.len() != n * n {
            return Err(DataError::BufferSize { n, d: n, found: entries.len() });
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(DataError::InvalidDistance { i, j: i });
            }
            for j in (i + 1)..n {
                let a = entries[i * n + j];
                if !a.is_finite() || a < 0.0 || a != entries[j * n + i] {
                    return Err(DataError::InvalidDistance { i, j });
                }
            }
        }
        Ok(Self { n, entries, metric })
    }

    /// Builds a matrix from a function evaluated on the strict upper triangle.
    pub fn from_fn(n: usize, metric: Metric, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, DataError> {
        let mut entries = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self::from_entries(n, entries, metric)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Largest off-diagonal entry (0 for a single sample).
    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// Returns a copy with every entry multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|d| d * factor).collect(), metric: self.metric }
    }

    /// Reorders samples: index `k` of the result is index `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = order.len();
        let mut entries = alloc::vec![0.0; n * n];
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                entries[a * n + b] = self.get(i, j);
            }
        }
        Self { n, entries, metric: self.metric }
    }
}

/// Computes all pairwise distances between embedding rows.
///
/// Cosine distance is `1 - u.v / (|u| |v|)`, clamped to `[0, 2]`; a zero row
/// is an error under cosine. Bitwise identical rows always get distance 0.
pub fn pairwise_distance(emb: &EmbeddingMatrix, metric: Metric) -> Result<DistanceMatrix, DataError> {
    let n = emb.n();
    let rows: Vec<Vec<f64>> = emb.rows().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
    let norms: Vec<f64> = rows.iter().map(|r| float::sqrt(dot(r, r))).collect();
    if metric == Metric::Cosine {
        if let Some(i) = norms.iter().position(|&v| v == 0.0) {
            return Err(DataError::ZeroVector(i));
        }
    }
    let mut entries = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = if rows[i] == rows[j] {
                0.0
            } else {
                match metric {
                    Metric::Cosine => (1.0 - dot(&rows[i], &rows[j]) / (norms[i] * norms[j])).clamp(0.0, 2.0),
                    Metric::Euclidean => {
                        let sq: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                        float::sqrt(sq)
                    }
                }
            };
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, entries, metric })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Downsamples a `width x height` single-channel image to `side x side` by
/// area averaging: each output pixel is the coverage-weighted mean of the
/// source pixels its footprint overlaps.
pub fn area_resize(pixels: &[f32], width: usize, height: usize, side: usize) -> Result<Vec<f32>, DataError> {
    if width == 0 || height == 0 || side == 0 || pixels.len() != width * height {
        return Err(DataError::InvalidResize { width, height, side });
    }
    let xs = spans(width, side);
    let ys = spans(height, side);
    let mut out = Vec::with_capacity(side * side);
    for ycov in &ys {
        for xcov in &xs {
            let mut acc = 0.0f64;
            let mut weight = 0.0f64;
            for &(y, wy) in ycov {
                for &(x, wx) in xcov {
                    let w = wx * wy;
                    acc += w * f64::from(pixels[y * width + x]);
                    weight += w;
                }
            }
            out.push((acc / weight) as f32);
        }
    }
    Ok(out)
}

/// For each of `dst` output cells, the source indices it overlaps with their
/// coverage lengths.
fn spans(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|k| {
            let start = k as f64 * scale;
            let end = (k + 1) as f64 * scale;
            let first = float::floor(start) as usize;
            let last = (float::ceil(end) as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let lo = start.max(s as f64);
                    let hi = end.min((s + 1) as f64);
                    (hi > lo).then_some((s, hi - lo))
                })
                .collect()
        })
        .collect()
}
