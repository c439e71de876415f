//! PNG reading and writing for the core raster types.

use std::path::Path;

use bias_audit_core::compositor::{GrayRaster, Mask, RgbRaster};
use image::{GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};

fn image_err(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image { path: path.to_path_buf(), source: other },
    }
}

/// Reads any PNG as 8-bit RGB.
pub fn read_rgb(path: &Path) -> Result<RgbRaster> {
    let img = image::open(path).map_err(|e| image_err(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(RgbRaster::from_bytes(w, h, img.as_raw())?)
}

/// Reads any PNG as 8-bit luminance.
pub fn read_gray(path: &Path) -> Result<GrayRaster> {
    let img = image::open(path).map_err(|e| image_err(path, e))?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(GrayRaster::new(w, h, img.into_raw())?)
}

pub fn write_rgb(path: &Path, raster: &RgbRaster) -> Result<()> {
    let img = RgbImage::from_raw(raster.width(), raster.height(), raster.to_bytes()).expect("raster length matches its dimensions");
    img.save_with_format(path, ImageFormat::Png).map_err(|e| image_err(path, e))
}

pub fn write_gray(path: &Path, raster: &GrayRaster) -> Result<()> {
    let img = GrayImage::from_raw(raster.width(), raster.height(), raster.pixels().to_vec()).expect("raster length matches its dimensions");
    img.save_with_format(path, ImageFormat::Png).map_err(|e| image_err(path, e))
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    write_gray(path, &mask.to_gray())
}
