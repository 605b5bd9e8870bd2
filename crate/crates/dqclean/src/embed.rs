//! Pixel baseline embedder: grayscale, area-resize to `side x side`,
//! flatten, L2-normalize.

use std::path::Path;

use dqclean_core::data::{area_resize, DatasetManifest, EmbeddingMatrix};

use crate::error::{Error, Result};

pub const DEFAULT_SIDE: u32 = 16;

/// Embeds one image file.
pub fn embed_image(path: &Path, side: u32) -> Result<Vec<f32>> {
    let img = image::open(path).map_err(|e| Error::Decode { path: path.to_path_buf(), message: e.to_string() })?;
    let gray = img.to_luma32f();
    let (w, h) = gray.dimensions();
    Ok(area_resize(gray.as_raw(), w as usize, h as usize, side as usize)?)
}

/// Embeds every manifest sample, resolving paths against `image_dir`.
/// All-black images become zero rows and clear the normalized flag.
pub fn baseline_embed(manifest: &DatasetManifest, image_dir: &Path, side: u32) -> Result<EmbeddingMatrix> {
    if side == 0 {
        return Err(Error::InvalidRequest("side must be positive".into()));
    }
    let d = (side * side) as usize;
    let mut values = Vec::with_capacity(manifest.len() * d);
    for sample in manifest.samples() {
        let path = image_dir.join(&sample.path);
        if !path.is_file() {
            return Err(Error::MissingImage { id: sample.id.clone(), path });
        }
        values.extend(embed_image(&path, side)?);
    }
    Ok(EmbeddingMatrix::for_manifest(manifest, manifest.len(), d, values)?.l2_normalized())
}
