use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use dqclean_core::data::{DatasetManifest, EmbeddingMatrix};

use crate::error::{Error, Result};

pub const SCEM_MAGIC: &[u8; 4] = b"SCEM";
pub const SCEM_VERSION: u8 = 0x01;
const HEADER_LEN: usize = 4 + 1 + 4 + 4;

/// Decodes a SCEM buffer into `(n, d, values)`.
pub fn decode_scem(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f32>), String> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != SCEM_MAGIC {
        return Err("missing SCEM magic".into());
    }
    if bytes[4] != SCEM_VERSION {
        return Err(format!("unsupported SCEM version {}", bytes[4]));
    }
    let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    let expected = n.checked_mul(d).and_then(|v| v.checked_mul(4)).ok_or("header dimensions overflow")?;
    if body.len() != expected {
        return Err(format!("header declares {n} x {d} values ({expected} bytes) but {} bytes follow", body.len()));
    }
    let values = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((n, d, values))
}

pub fn encode_scem(emb: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + emb.values().len() * 4);
    out.extend_from_slice(SCEM_MAGIC);
    out.push(SCEM_VERSION);
    out.extend_from_slice(&(emb.n() as u32).to_le_bytes());
    out.extend_from_slice(&(emb.d() as u32).to_le_bytes());
    for v in emb.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Loads embeddings aligned to `manifest`, accepting either the SCEM binary
/// format or the CSV alternative (detected by content).
pub fn read_embeddings(path: &Path, manifest: &DatasetManifest) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(SCEM_MAGIC) {
        let (n, d, values) =
            decode_scem(&bytes).map_err(|message| Error::Format { path: path.to_path_buf(), message })?;
        Ok(EmbeddingMatrix::for_manifest(manifest, n, d, values)?)
    } else if bytes.starts_with(b"id,") {
        read_embeddings_csv(bytes.as_slice(), manifest, path)
    } else {
        Err(Error::Format { path: path.to_path_buf(), message: "neither SCEM magic nor an `id,e0,...` header".into() })
    }
}

/// CSV with header `id,e0,...,e{D-1}`; ids must follow the manifest order.
pub fn read_embeddings_csv(reader: impl Read, manifest: &DatasetManifest, origin: &Path) -> Result<EmbeddingMatrix> {
    let format = |message: String| Error::Format { path: origin.to_path_buf(), message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| format(e.to_string()))?.clone();
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(format("header must start with `id` and list at least one dimension".into()));
    }
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("e{k}") {
            return Err(format(format!("column {} is `{name}`, expected `e{k}`", k + 1)));
        }
    }
    let d = header.len() - 1;
    let mut values = Vec::with_capacity(manifest.len() * d);
    let mut rows = 0;
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.position().map_or(row + 2, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        rows += 1;
        let id = &record[0];
        match manifest.get(row) {
            Some(sample) if sample.id == id => {}
            Some(sample) => {
                return Err(Error::IdMismatch {
                    path: origin.to_path_buf(),
                    row,
                    expected: sample.id.clone(),
                    found: id.to_string(),
                })
            }
            // Surplus rows are counted and reported as a shape mismatch.
            None => continue,
        }
        for (col, field) in record.iter().skip(1).enumerate() {
            let v: f32 = field.trim().parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: row + 2,
                message: format!("column e{col}: `{field}` is not a number"),
            })?;
            values.push(v);
        }
    }
    Ok(EmbeddingMatrix::for_manifest(manifest, rows, d, values)?)
}

pub fn write_embeddings_csv(
    mut out: impl Write,
    emb: &EmbeddingMatrix,
    manifest: &DatasetManifest,
) -> std::io::Result<()> {
    write!(out, "id")?;
    for k in 0..emb.d() {
        write!(out, ",e{k}")?;
    }
    writeln!(out)?;
    for (sample, row) in manifest.samples().iter().zip(emb.rows()) {
        write!(out, "{}", sample.id)?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}
