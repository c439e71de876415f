//! Inserting every bias variant into every image of a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use bias_audit_core::compositor::BiasVariant;
use bias_audit_core::model::{BiasFamily, ImageRecord, VariantId};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::png;

pub const BIASED_MANIFEST_COLUMNS: [&str; 5] = ["image_id", "family", "variant_id", "path", "status"];
pub const BIASED_MANIFEST_FILE: &str = "biased_manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertStatus {
    Ok,
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasedRow {
    pub image_id: String,
    pub family: BiasFamily,
    pub variant_id: VariantId,
    /// Output path relative to the output directory, `/`-separated.
    pub path: String,
    pub status: InsertStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BiasedSetManifest {
    pub rows: Vec<BiasedRow>,
}

impl BiasedSetManifest {
    pub fn skipped(&self) -> usize {
        self.rows.iter().filter(|r| r.status != InsertStatus::Ok).count()
    }
}

pub fn output_rel_path(family: BiasFamily, variant: VariantId, image_id: &str) -> String {
    format!("{family}/{variant}/{image_id}.png")
}

/// Writes `out_dir/<family>/<variant_id>/<image_id>.png` for every pair.
///
/// Images that cannot be read are skipped and recorded as such; failures to
/// write output are fatal. Rows are ordered by variant, then manifest order.
pub fn batch_insert(images: &[ImageRecord], image_root: &Path, variants: &[BiasVariant], out_dir: &Path, feather_radius: u32) -> Result<BiasedSetManifest> {
    for v in variants {
        let d = out_dir.join(v.family().as_str()).join(v.variant_id().to_string());
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let per_image: Vec<Vec<(usize, BiasedRow)>> = images
        .par_iter()
        .map(|rec| -> Result<Vec<(usize, BiasedRow)>> {
            let src = image_root.join(&rec.path);
            let loaded = png::read_rgb(&src);
            if let Err(e) = &loaded {
                log::warn!("skipping {}: {e}", rec.image_id);
            }
            let mut rows = Vec::with_capacity(variants.len());
            for (vi, v) in variants.iter().enumerate() {
                let rel = output_rel_path(v.family(), v.variant_id(), &rec.image_id);
                let status = match &loaded {
                    Ok(img) => {
                        let out = v.apply(img, feather_radius)?;
                        png::write_rgb(&out_dir.join(&rel), &out)?;
                        InsertStatus::Ok
                    }
                    Err(e) => InsertStatus::Skipped(skip_reason(e)),
                };
                rows.push((vi, BiasedRow { image_id: rec.image_id.clone(), family: v.family(), variant_id: v.variant_id(), path: rel, status }));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    // par_iter collect keeps manifest order; regroup by variant.
    let mut indexed: Vec<(usize, usize, BiasedRow)> =
        per_image.into_iter().enumerate().flat_map(|(ii, rows)| rows.into_iter().map(move |(vi, r)| (vi, ii, r))).collect();
    indexed.sort_by_key(|(vi, ii, _)| (*vi, *ii));
    Ok(BiasedSetManifest { rows: indexed.into_iter().map(|(_, _, r)| r).collect() })
}

// Keeps absolute paths out of the manifest so it only depends on the inputs.
fn skip_reason(e: &Error) -> String {
    match e {
        Error::Io { source, .. } => format!("unreadable: {source}"),
        Error::Image { source, .. } => format!("undecodable: {source}"),
        other => other.to_string(),
    }
}

pub fn write_biased_manifest(path: &Path, manifest: &BiasedSetManifest) -> Result<()> {
    let csv_err = |e: csv::Error| Error::format(path, e);
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(BIASED_MANIFEST_COLUMNS).map_err(csv_err)?;
    for r in &manifest.rows {
        let status = match &r.status {
            InsertStatus::Ok => "ok".to_string(),
            InsertStatus::Skipped(why) => format!("skipped: {why}"),
        };
        w.write_record([r.image_id.as_str(), r.family.as_str(), &r.variant_id.to_string(), r.path.as_str(), status.as_str()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn biased_image_path(out_dir: &Path, row: &BiasedRow) -> PathBuf {
    out_dir.join(&row.path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bias_audit_core::compositor::fixture::canonical_variants;
    use bias_audit_core::compositor::RgbRaster;
    use bias_audit_core::model::{ClassLabel, SourceKind};

    #[test]
    fn writes_every_pair_and_skips_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("img");
        fs::create_dir_all(&root).unwrap();
        png::write_rgb(&root.join("a.png"), &RgbRaster::filled(20, 10, [200, 180, 160]).unwrap()).unwrap();
        fs::write(root.join("b.png"), b"broken").unwrap();
        let images = vec![
            ImageRecord::new("a", SourceKind::Real, ClassLabel::Benign, "a.png").unwrap(),
            ImageRecord::new("b", SourceKind::Real, ClassLabel::Benign, "b.png").unwrap(),
        ];
        let variants = canonical_variants(32).unwrap();
        let out = dir.path().join("out");
        let m = batch_insert(&images, &root, &variants[..3], &out, 0).unwrap();
        assert_eq!(m.rows.len(), 6);
        assert_eq!(m.skipped(), 3);
        assert_eq!(m.rows[0].image_id, "a");
        assert_eq!(m.rows[1].image_id, "b");
        let img = png::read_rgb(&biased_image_path(&out, &m.rows[0])).unwrap();
        assert_eq!(img.dims(), (20, 10));
        assert_eq!(img.get(0, 0), [0, 0, 0]);
        assert!(!biased_image_path(&out, &m.rows[1]).exists());
    }
}
