//! A deterministic stand-in classifier: darker images look more malignant.
//!
//! `p_malignant = 1 - mean_intensity / 255`. Used to exercise the pipeline
//! without a trained model.

use std::fs;
use std::path::Path;

use bias_audit_core::compositor::RgbRaster;
use bias_audit_core::model::{BiasTag, ImageRecord, PredictionRecord, PredictionSet};
use rayon::prelude::*;

use crate::batch::{biased_image_path, BiasedSetManifest, InsertStatus};
use crate::error::{Error, Result};
use crate::png;
use crate::predictions::write_predictions;

pub fn stub_probability(img: &RgbRaster) -> f64 {
    1.0 - img.mean_intensity() / 255.0
}

fn predict(run_id: &str, tag: Option<BiasTag>, items: &[(String, std::path::PathBuf)], threshold: f64) -> Result<PredictionSet> {
    let records = items
        .par_iter()
        .map(|(id, path)| Ok(PredictionRecord::with_threshold(id.clone(), stub_probability(&png::read_rgb(path)?), threshold)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictionSet::new(run_id, tag, records)?)
}

/// Predictions for the clean images of a manifest.
pub fn predict_clean(records: &[ImageRecord], image_root: &Path, threshold: f64) -> Result<PredictionSet> {
    let items: Vec<_> = records.iter().map(|r| (r.image_id.clone(), image_root.join(&r.path))).collect();
    predict("baseline", None, &items, threshold)
}

/// One prediction set per variant present in a batch-insert manifest.
/// Skipped rows produce no prediction.
pub fn predict_biased(manifest: &BiasedSetManifest, out_dir: &Path, threshold: f64) -> Result<Vec<PredictionSet>> {
    let mut tags: Vec<BiasTag> = manifest.rows.iter().map(|r| BiasTag { family: r.family, variant: r.variant_id }).collect();
    tags.dedup();
    let mut sets = Vec::with_capacity(tags.len());
    for tag in tags {
        let items: Vec<_> = manifest
            .rows
            .iter()
            .filter(|r| r.family == tag.family && r.variant_id == tag.variant && r.status == InsertStatus::Ok)
            .map(|r| (r.image_id.clone(), biased_image_path(out_dir, r)))
            .collect();
        if items.is_empty() {
            continue;
        }
        sets.push(predict(&format!("{}/{}", tag.family, tag.variant), Some(tag), &items, threshold)?);
    }
    Ok(sets)
}

/// Lays predictions out as `dir/baseline.jsonl` and `dir/<family>/<variant_id>.jsonl`.
pub fn write_prediction_tree(dir: &Path, baseline: &PredictionSet, biased: &[PredictionSet]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_predictions(&dir.join("baseline.jsonl"), baseline)?;
    for set in biased {
        let tag = set.bias_tag().ok_or_else(|| Error::Validation(format!("set `{}` has no bias tag", set.run_id())))?;
        let fam = dir.join(tag.family.as_str());
        fs::create_dir_all(&fam).map_err(|e| Error::io(&fam, e))?;
        write_predictions(&fam.join(format!("{}.jsonl", tag.variant)), set)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_is_certain_white_is_benign() {
        assert_eq!(stub_probability(&RgbRaster::filled(2, 2, [0, 0, 0]).unwrap()), 1.0);
        assert_eq!(stub_probability(&RgbRaster::filled(2, 2, [255, 255, 255]).unwrap()), 0.0);
    }
}
