//! Bias mask directories: `<dir>/<family>/<variant_id>.png` holds the mask,
//! binarized at a threshold. An optional `<variant_id>.src.png` next to it
//! holds the pixel source; without one the source is constant black. A 1x1
//! source image stands for a constant color.

use std::fs;
use std::path::{Path, PathBuf};

use bias_audit_core::compositor::{binarize_mask, BiasVariant, PixelSource, BLACK};
use bias_audit_core::model::{BiasFamily, VariantId};

use crate::error::{Error, Result};
use crate::png;

pub fn mask_file(dir: &Path, family: BiasFamily, variant: VariantId) -> PathBuf {
    dir.join(family.as_str()).join(format!("{variant}.png"))
}

pub fn source_file(dir: &Path, family: BiasFamily, variant: VariantId) -> PathBuf {
    dir.join(family.as_str()).join(format!("{variant}.src.png"))
}

pub fn load_variant(dir: &Path, family: BiasFamily, variant: VariantId, threshold: u8) -> Result<BiasVariant> {
    let mask = binarize_mask(&png::read_gray(&mask_file(dir, family, variant))?, threshold)?;
    let src = source_file(dir, family, variant);
    let source = if src.exists() {
        let img = png::read_rgb(&src)?;
        if img.dims() == (1, 1) {
            PixelSource::Constant(img.get(0, 0))
        } else {
            PixelSource::Image(img)
        }
    } else {
        PixelSource::Constant(BLACK)
    };
    BiasVariant::new(family, variant, mask, source).map_err(|e| Error::format(&src, e))
}

/// Every variant present under `dir`, in family then variant order.
pub fn load_variants(dir: &Path, threshold: u8) -> Result<Vec<BiasVariant>> {
    if !dir.is_dir() {
        return Err(Error::format(dir, "mask directory not found"));
    }
    let mut out = Vec::new();
    for &family in BiasFamily::ALL {
        for variant in VariantId::all() {
            if mask_file(dir, family, variant).exists() {
                out.push(load_variant(dir, family, variant, threshold)?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::format(dir, "no masks found"));
    }
    Ok(out)
}

pub fn write_variants(dir: &Path, variants: &[BiasVariant]) -> Result<()> {
    for v in variants {
        let mask = mask_file(dir, v.family(), v.variant_id());
        let parent = mask.parent().expect("mask path has a family directory");
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        png::write_mask(&mask, &v.mask)?;
        let src = source_file(dir, v.family(), v.variant_id());
        match &v.source {
            PixelSource::Constant(c) if *c == BLACK => {}
            PixelSource::Constant(c) => png::write_rgb(&src, &bias_audit_core::compositor::RgbRaster::filled(1, 1, *c)?)?,
            PixelSource::Image(img) => png::write_rgb(&src, img)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use bias_audit_core::compositor::fixture::canonical_variants;

    #[test]
    fn canonical_set_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let variants = canonical_variants(48).unwrap();
        write_variants(dir.path(), &variants).unwrap();
        assert_eq!(load_variants(dir.path(), 128).unwrap(), variants);
    }

    #[test]
    fn frame_with_colored_source_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let variants = canonical_variants(16).unwrap();
        write_variants(dir.path(), &variants[..1]).unwrap();
        let v = VariantId::new(1).unwrap();
        png::write_rgb(&source_file(dir.path(), BiasFamily::Frame, v), &bias_audit_core::compositor::RgbRaster::filled(1, 1, [9, 9, 9]).unwrap()).unwrap();
        assert!(load_variants(dir.path(), 128).is_err());
    }
}
