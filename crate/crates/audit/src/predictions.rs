//! Prediction files, one JSON object per line:
//! `{"image_id": .., "p_malignant": .., "bias_family": .., "bias_variant": ..}`.
//! The two bias keys are absent (or null) for baseline runs.

use std::fs;
use std::io::Write;
use std::path::Path;

use bias_audit_core::model::{BiasFamily, BiasTag, PredictionRecord, PredictionSet, VariantId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub image_id: String,
    pub p_malignant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_variant: Option<u8>,
}

fn line_tag(line: &PredictionLine) -> std::result::Result<Option<BiasTag>, String> {
    match (&line.bias_family, line.bias_variant) {
        (None, None) => Ok(None),
        (Some(f), Some(v)) => {
            let family: BiasFamily = f.parse().map_err(|e: bias_audit_core::Error| e.to_string())?;
            let variant = VariantId::new(v).map_err(|e| e.to_string())?;
            Ok(Some(BiasTag { family, variant }))
        }
        _ => Err("bias_family and bias_variant must be given together".into()),
    }
}

/// Run id used for a set: `family/variant` for tagged sets, else the file stem.
pub fn run_id_for(path: &Path, tag: Option<BiasTag>) -> String {
    match tag {
        Some(t) => format!("{}/{}", t.family, t.variant),
        None => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    }
}

/// Reads a prediction file. Every line must carry the same bias tag. Blank
/// lines are skipped.
pub fn load_predictions(path: &Path, threshold: f64) -> Result<PredictionSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut tag: Option<Option<BiasTag>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: PredictionLine = serde_json::from_str(raw).map_err(|e| Error::parse(path, line_no, e))?;
        let this = line_tag(&line).map_err(|m| Error::parse(path, line_no, m))?;
        match tag {
            None => tag = Some(this),
            Some(t) if t != this => return Err(Error::parse(path, line_no, "bias tag differs from earlier lines")),
            Some(_) => {}
        }
        let rec = PredictionRecord::with_threshold(line.image_id, line.p_malignant, threshold).map_err(|e| Error::parse(path, line_no, e))?;
        records.push(rec);
    }
    let tag = tag.flatten();
    PredictionSet::new(run_id_for(path, tag), tag, records).map_err(|e| Error::format(path, e))
}

pub fn write_predictions(path: &Path, set: &PredictionSet) -> Result<()> {
    let mut out = Vec::new();
    let tag = set.bias_tag();
    for r in set.records() {
        let line = PredictionLine {
            image_id: r.image_id.clone(),
            p_malignant: r.p_malignant,
            bias_family: tag.map(|t| t.family.to_string()),
            bias_variant: tag.map(|t| t.variant.get()),
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::format(path, e))?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}
