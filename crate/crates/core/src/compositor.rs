//! Mask-driven artifact insertion.
//!
//! A [`BiasVariant`] pairs a binary [`Mask`] with a [`PixelSource`]; inserting
//! it copies source pixels into the target wherever the mask is set. Masks
//! are resized nearest-neighbor so they stay binary, image sources bilinearly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{BiasFamily, BiasTag, VariantId};

pub type Rgb = [u8; 3];

pub const BLACK: Rgb = [0, 0, 0];

/// Default gray level at or above which a mask pixel is set.
pub const DEFAULT_MASK_THRESHOLD: u8 = 128;

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbRaster {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl RgbRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: pixels.len() });
        }
        Ok(RgbRaster { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color; width as usize * height as usize])
    }

    /// Builds a raster from interleaved RGB bytes.
    pub fn from_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(3) {
            return Err(Error::DimensionMismatch { expected: bytes.len() / 3 * 3, actual: bytes.len() });
        }
        Self::new(width, height, bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Mean over all channels of all pixels, in `0..=255`.
    pub fn mean_intensity(&self) -> f64 {
        let sum: u64 = self.pixels.iter().flatten().map(|&c| c as u64).sum();
        sum as f64 / (self.pixels.len() * 3) as f64
    }

    /// Bilinear resize with pixel-center alignment.
    pub fn resize_bilinear(&self, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if (width, height) == self.dims() {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut out = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy as u32;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx as u32;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                let (p00, p10, p01, p11) = (self.get(x0, y0), self.get(x1, y0), self.get(x0, y1), self.get(x1, y1));
                let mut px = [0u8; 3];
                for c in 0..3 {
                    let top = p00[c] as f64 * (1.0 - wx) + p10[c] as f64 * wx;
                    let bottom = p01[c] as f64 * (1.0 - wx) + p11[c] as f64 * wx;
                    px[c] = libm::round(top * (1.0 - wy) + bottom * wy).clamp(0.0, 255.0) as u8;
                }
                out.push(px);
            }
        }
        Self::new(width, height, out)
    }
}

/// Row-major 8-bit single-channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.is_empty() {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: pixels.len() });
        }
        Ok(GrayRaster { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// Binary artifact mask; `true` marks an artifact pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: bits.len() });
        }
        Ok(Mask { width, height, bits })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Result<Self> {
        let bits = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Gray image with set bits at 255, clear bits at 0.
    pub fn to_gray(&self) -> GrayRaster {
        let pixels = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayRaster { width: self.width, height: self.height, pixels }
    }

    pub fn resize_nearest(&self, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if (width, height) == self.dims() {
            return Ok(self.clone());
        }
        let (w, h) = (self.width as u64, self.height as u64);
        Self::from_fn(width, height, |x, y| {
            let sx = ((x as u64 * w) / width as u64).min(w - 1) as u32;
            let sy = ((y as u64 * h) / height as u64).min(h - 1) as u32;
            self.get(sx, sy)
        })
    }
}

/// Thresholds a gray image: a bit is set iff the pixel is `>= threshold`.
pub fn binarize_mask(gray: &GrayRaster, threshold: u8) -> Result<Mask> {
    if gray.pixels.is_empty() {
        return Err(Error::EmptyImage);
    }
    Mask::new(gray.width, gray.height, gray.pixels.iter().map(|&p| p >= threshold).collect())
}

/// Where inserted artifact pixels come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PixelSource {
    Image(RgbRaster),
    Constant(Rgb),
}

impl PixelSource {
    fn at_size(&self, width: u32, height: u32) -> Result<PixelSource> {
        match self {
            PixelSource::Image(img) if img.dims() != (width, height) => Ok(PixelSource::Image(img.resize_bilinear(width, height)?)),
            other => Ok(other.clone()),
        }
    }

    fn pixel(&self, index: usize) -> Rgb {
        match self {
            PixelSource::Image(img) => img.pixels[index],
            PixelSource::Constant(c) => *c,
        }
    }
}

/// Copies `source` pixels into `target` under `mask`.
///
/// With `feather_radius == 0` the result is a hard per-pixel select. A
/// positive radius blends pixels outside the mask with weight
/// `1 - d / (radius + 1)`, where `d` is the Euclidean distance to the nearest
/// mask pixel, so the ramp reaches zero just beyond `radius`.
pub fn insert_artifact(target: &RgbRaster, source: &PixelSource, mask: &Mask, feather_radius: u32) -> Result<RgbRaster> {
    let (w, h) = target.dims();
    let mask = mask.resize_nearest(w, h)?;
    let source = source.at_size(w, h)?;
    if mask.dims() != target.dims() {
        return Err(Error::DimensionMismatch { expected: target.pixels.len(), actual: mask.bits.len() });
    }

    let pixels = if feather_radius == 0 {
        target
            .pixels
            .iter()
            .zip(&mask.bits)
            .enumerate()
            .map(|(i, (&t, &set))| if set { source.pixel(i) } else { t })
            .collect()
    } else {
        let alpha = feather_alpha(&mask, feather_radius);
        target
            .pixels
            .iter()
            .zip(&alpha)
            .enumerate()
            .map(|(i, (&t, &a))| {
                if a >= 1.0 {
                    return source.pixel(i);
                }
                if a <= 0.0 {
                    return t;
                }
                let s = source.pixel(i);
                let mut px = [0u8; 3];
                for c in 0..3 {
                    px[c] = libm::round(s[c] as f64 * a + t[c] as f64 * (1.0 - a)).clamp(0.0, 255.0) as u8;
                }
                px
            })
            .collect()
    };
    RgbRaster::new(w, h, pixels)
}

fn feather_alpha(mask: &Mask, radius: u32) -> Vec<f64> {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let r = radius as i64;
    let mut alpha = vec![0.0; mask.bits.len()];
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if mask.bits[idx] {
                alpha[idx] = 1.0;
                continue;
            }
            let mut best = f64::INFINITY;
            for ny in (y - r).max(0)..=(y + r).min(h - 1) {
                for nx in (x - r).max(0)..=(x + r).min(w - 1) {
                    if mask.bits[(ny * w + nx) as usize] {
                        let d2 = ((nx - x) * (nx - x) + (ny - y) * (ny - y)) as f64;
                        if d2 < best {
                            best = d2;
                        }
                    }
                }
            }
            if best.is_finite() {
                alpha[idx] = (1.0 - libm::sqrt(best) / (radius as f64 + 1.0)).max(0.0);
            }
        }
    }
    alpha
}

/// One insertable bias: a family, a variant id, its mask and pixel source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasVariant {
    pub tag: BiasTag,
    pub mask: Mask,
    pub source: PixelSource,
}

impl BiasVariant {
    /// Frames are always painted constant black.
    pub fn new(family: BiasFamily, variant: VariantId, mask: Mask, source: PixelSource) -> Result<Self> {
        if family == BiasFamily::Frame && source != PixelSource::Constant(BLACK) {
            return Err(Error::FrameSourceNotBlack);
        }
        Ok(BiasVariant { tag: BiasTag { family, variant }, mask, source })
    }

    pub fn family(&self) -> BiasFamily {
        self.tag.family
    }

    pub fn variant_id(&self) -> VariantId {
        self.tag.variant
    }

    pub fn apply(&self, target: &RgbRaster, feather_radius: u32) -> Result<RgbRaster> {
        insert_artifact(target, &self.source, &self.mask, feather_radius)
    }
}

pub mod fixture {
    //! Procedurally drawn stand-ins for the 25 canonical bias masks:
    //! 5 frames, 5 rulers and 5 each of dense, medium and short hair.

    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub const HAIR_COLOR: Rgb = [58, 38, 28];

    /// All 25 variants at `size x size`, in family then variant order.
    pub fn canonical_variants(size: u32) -> Result<Vec<BiasVariant>> {
        let mut out = Vec::with_capacity(25);
        for family in BiasFamily::ALL {
            for variant in VariantId::all() {
                out.push(canonical_variant(*family, variant, size)?);
            }
        }
        Ok(out)
    }

    pub fn canonical_variant(family: BiasFamily, variant: VariantId, size: u32) -> Result<BiasVariant> {
        let v = variant.get();
        let (mask, source) = match family {
            BiasFamily::Frame => (frame_mask(v, size)?, PixelSource::Constant(BLACK)),
            BiasFamily::Ruler => ruler(v, size)?,
            BiasFamily::HairDense => (hair_mask(size, 0xD0 + v as u64, 70, 40..120, 2)?, PixelSource::Constant(HAIR_COLOR)),
            BiasFamily::HairMedium => (hair_mask(size, 0x30 + v as u64, 18, 60..180, 1)?, PixelSource::Constant(HAIR_COLOR)),
            BiasFamily::HairShort => (hair_mask(size, 0x50 + v as u64, 90, 6..16, 1)?, PixelSource::Constant(HAIR_COLOR)),
        };
        BiasVariant::new(family, variant, mask, source)
    }

    /// Variants 1-2 are rectangular borders, 3-5 round vignettes of decreasing radius.
    fn frame_mask(v: u8, size: u32) -> Result<Mask> {
        let s = size as f64;
        match v {
            1 | 2 => {
                let t = if v == 1 { size / 64 + 1 } else { size / 16 + 1 };
                Mask::from_fn(size, size, |x, y| x < t || y < t || x >= size - t || y >= size - t)
            }
            _ => {
                let r = s * [0.56, 0.49, 0.42][(v - 3) as usize];
                let c = (s - 1.0) / 2.0;
                Mask::from_fn(size, size, |x, y| {
                    let (dx, dy) = (x as f64 - c, y as f64 - c);
                    dx * dx + dy * dy > r * r
                })
            }
        }
    }

    /// A straight ruler band with tick marks, placed differently per variant.
    fn ruler(v: u8, size: u32) -> Result<(Mask, PixelSource)> {
        let s = size as f64;
        let thickness = s * [0.06, 0.08, 0.05, 0.07, 0.04][(v - 1) as usize];
        // (angle in degrees, offset of the band center from the image center)
        let (angle, offset) = [(0.0, 0.40), (90.0, -0.38), (30.0, 0.30), (-45.0, 0.33), (0.0, -0.42)][(v - 1) as usize];
        let theta = angle * core::f64::consts::PI / 180.0;
        let (sin, cos) = (libm::sin(theta), libm::cos(theta));
        let c = (s - 1.0) / 2.0;
        let coords = |x: u32, y: u32| {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            // along-band and across-band coordinates
            (dx * cos + dy * sin, -dx * sin + dy * cos - offset * s)
        };
        let mask = Mask::from_fn(size, size, |x, y| libm::fabs(coords(x, y).1) <= thickness / 2.0)?;
        let tick = (s / 32.0).max(2.0);
        let pixels = (0..size)
            .flat_map(|y| (0..size).map(move |x| (x, y)))
            .map(|(x, y)| {
                let (along, across) = coords(x, y);
                let phase = libm::fmod(along + 2.0 * s, tick);
                let mark_len = if libm::fmod(libm::floor((along + 2.0 * s) / tick), 5.0) == 0.0 { 0.6 } else { 0.3 };
                if phase < 1.0 && across < -thickness / 2.0 + thickness * mark_len {
                    [20, 20, 20]
                } else {
                    [238, 234, 226]
                }
            })
            .collect();
        Ok((mask, PixelSource::Image(RgbRaster::new(size, size, pixels)?)))
    }

    /// Random-walk strands drawn with a seeded generator.
    fn hair_mask(size: u32, seed: u64, strands: usize, length: core::ops::Range<u32>, width: u32) -> Result<Mask> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bits = vec![false; size as usize * size as usize];
        let s = size as f64;
        let scale = s / 256.0;
        for _ in 0..strands {
            let mut x = rng.random_range(0.0..s);
            let mut y = rng.random_range(0.0..s);
            let mut heading = rng.random_range(0.0..core::f64::consts::TAU);
            let steps = (rng.random_range(length.clone()) as f64 * scale).max(2.0) as u32;
            for _ in 0..steps {
                heading += rng.random_range(-0.12..0.12);
                x += libm::cos(heading);
                y += libm::sin(heading);
                let half = width as i64 / 2;
                for oy in -half..=(width as i64 - 1 - half) {
                    for ox in -half..=(width as i64 - 1 - half) {
                        let (px, py) = (x as i64 + ox, y as i64 + oy);
                        if px >= 0 && py >= 0 && px < size as i64 && py < size as i64 {
                            bits[(py * size as i64 + px) as usize] = true;
                        }
                    }
                }
            }
        }
        Mask::new(size, size, bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: u32, h: u32, v: u8) -> GrayRaster {
        GrayRaster::new(w, h, vec![v; (w * h) as usize]).unwrap()
    }

    #[test]
    fn binarize_extremes_and_threshold() {
        assert!(binarize_mask(&gray(3, 2, 255), 128).unwrap().bits().iter().all(|&b| b));
        assert!(binarize_mask(&gray(3, 2, 0), 128).unwrap().bits().iter().all(|&b| !b));
        let m = binarize_mask(&GrayRaster::new(2, 1, vec![127, 128]).unwrap(), 128).unwrap();
        assert_eq!(m.bits(), &[false, true]);
    }

    #[test]
    fn empty_images_rejected() {
        assert_eq!(GrayRaster::new(0, 0, vec![]), Err(Error::EmptyImage));
        assert_eq!(RgbRaster::new(0, 3, vec![]), Err(Error::EmptyImage));
    }

    #[test]
    fn two_by_two_example() {
        let (a, b, c, d, k) = ([1, 1, 1], [2, 2, 2], [3, 3, 3], [4, 4, 4], [9, 8, 7]);
        let target = RgbRaster::new(2, 2, vec![a, b, c, d]).unwrap();
        let mask = Mask::new(2, 2, vec![true, false, false, true]).unwrap();
        let out = insert_artifact(&target, &PixelSource::Constant(k), &mask, 0).unwrap();
        assert_eq!(out.pixels(), &[k, b, c, k]);
    }

    #[test]
    fn zero_and_full_masks() {
        let target = RgbRaster::filled(4, 3, [10, 200, 30]).unwrap();
        let zero = Mask::new(4, 3, vec![false; 12]).unwrap();
        assert_eq!(insert_artifact(&target, &PixelSource::Constant(BLACK), &zero, 0).unwrap(), target);
        let full = Mask::new(4, 3, vec![true; 12]).unwrap();
        let out = insert_artifact(&target, &PixelSource::Constant(BLACK), &full, 0).unwrap();
        assert!(out.pixels().iter().all(|p| *p == BLACK));
    }

    #[test]
    fn mask_is_resized_to_target() {
        let target = RgbRaster::filled(4, 4, [255, 255, 255]).unwrap();
        // left half set at 2x2
        let mask = Mask::new(2, 2, vec![true, false, true, false]).unwrap();
        let out = insert_artifact(&target, &PixelSource::Constant(BLACK), &mask, 0).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(out.get(x, y) == BLACK, x < 2);
            }
        }
    }

    #[test]
    fn bilinear_constant_is_exact() {
        let img = RgbRaster::filled(5, 7, [12, 34, 56]).unwrap();
        let r = img.resize_bilinear(16, 3).unwrap();
        assert!(r.pixels().iter().all(|p| *p == [12, 34, 56]));
    }

    #[test]
    fn feather_ramps_outside_mask() {
        let target = RgbRaster::filled(9, 1, [200, 200, 200]).unwrap();
        let mask = Mask::from_fn(9, 1, |x, _| x == 4).unwrap();
        let out = insert_artifact(&target, &PixelSource::Constant(BLACK), &mask, 2).unwrap();
        let row: Vec<u8> = out.pixels().iter().map(|p| p[0]).collect();
        // alpha: d=1 -> 2/3, d=2 -> 1/3, d=3 -> 0
        assert_eq!(row, vec![200, 200, 133, 67, 0, 67, 133, 200, 200]);
    }

    #[test]
    fn frame_requires_black() {
        let mask = Mask::new(1, 1, vec![true]).unwrap();
        let v = VariantId::new(1).unwrap();
        assert_eq!(
            BiasVariant::new(BiasFamily::Frame, v, mask.clone(), PixelSource::Constant([1, 0, 0])),
            Err(Error::FrameSourceNotBlack)
        );
        assert!(BiasVariant::new(BiasFamily::Ruler, v, mask, PixelSource::Constant([1, 0, 0])).is_ok());
    }

    #[test]
    fn canonical_set_shape() {
        let vs = fixture::canonical_variants(64).unwrap();
        assert_eq!(vs.len(), 25);
        for v in &vs {
            let set = v.mask.count_set();
            assert!(set > 0 && set < 64 * 64, "{:?} covers {set} pixels", v.tag);
            if v.family() == BiasFamily::Frame {
                assert_eq!(v.source, PixelSource::Constant(BLACK));
            }
        }
        // determinism
        assert_eq!(vs, fixture::canonical_variants(64).unwrap());
    }
}
