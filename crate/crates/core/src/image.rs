//! Raster types shared by every stage of the pipeline.
//!
//! All rasters are row-major. [`ImageBuffer`] is 8-bit RGB with interleaved
//! channels, [`GrayBuffer`] is single-channel 8-bit, [`HeatMap`] holds one
//! nonnegative finite score per pixel and [`BinaryMask`] one bit per pixel.

use crate::error::{Error, Result};

/// Number of interleaved samples per pixel in an [`ImageBuffer`].
pub const CHANNELS: usize = 3;

fn check_dims(width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "raster dimensions must be positive, got {width}x{height}"
        )));
    }
    width
        .checked_mul(height)
        .ok_or_else(|| Error::DimensionOverflow(format!("{width}x{height}")))
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub const fn area(&self) -> usize {
        self.width * self.height
    }

    /// Whether the rectangle lies entirely inside a `width`x`height` raster.
    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.x
            .checked_add(self.width)
            .is_some_and(|right| right <= width)
            && self
                .y
                .checked_add(self.height)
                .is_some_and(|bottom| bottom <= height)
    }
}

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    /// Wraps interleaved RGB samples; `data.len()` must be `width * height * 3`.
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        let expected = pixels
            .checked_mul(CHANNELS)
            .ok_or_else(|| Error::DimensionOverflow(format!("{width}x{height}x{CHANNELS}")))?;
        if data.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} samples for {width}x{height} RGB, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        let data = rgb.iter().copied().cycle().take(pixels * CHANNELS).collect();
        Self::new(width, height, data)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        let mut data = Vec::with_capacity(pixels * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    /// Copies out the pixels under `rect`.
    pub fn crop(&self, rect: Rect) -> Result<ImageBuffer> {
        if rect.area() == 0 || !rect.fits_in(self.width, self.height) {
            return Err(Error::InvalidArgument(format!(
                "crop {rect:?} does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(rect.area() * CHANNELS);
        for y in rect.y..rect.y + rect.height {
            let start = (y * self.width + rect.x) * CHANNELS;
            data.extend_from_slice(&self.data[start..start + rect.width * CHANNELS]);
        }
        ImageBuffer::new(rect.width, rect.height, data)
    }

    /// Writes `patch` with its top-left corner at `(x, y)`.
    pub fn paste(&mut self, patch: &ImageBuffer, x: usize, y: usize) -> Result<()> {
        let rect = Rect::new(x, y, patch.width, patch.height);
        if !rect.fits_in(self.width, self.height) {
            return Err(Error::InvalidArgument(format!(
                "paste {rect:?} does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        for row in 0..patch.height {
            let dst = ((y + row) * self.width + x) * CHANNELS;
            let src = row * patch.width * CHANNELS;
            self.data[dst..dst + patch.width * CHANNELS]
                .copy_from_slice(&patch.data[src..src + patch.width * CHANNELS]);
        }
        Ok(())
    }
}

/// 8-bit single-channel raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayBuffer {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayBuffer {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        if data.len() != pixels {
            return Err(Error::InvalidArgument(format!(
                "expected {pixels} samples for {width}x{height} gray, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Per-pixel nonnegative scores.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl HeatMap {
    /// Fails if any value is negative, NaN or infinite.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        if values.len() != pixels {
            return Err(Error::InvalidArgument(format!(
                "expected {pixels} values for {width}x{height} heat map, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "heat values must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        Self::new(width, height, vec![value; pixels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// `(min, max)` over all values.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Quantizes to 8 bits after min-max scaling to `[0, 255]`.
    pub fn to_gray(&self) -> GrayBuffer {
        let scaled = crate::fusion::normalize_heatmap(self);
        let data = scaled
            .values
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        GrayBuffer {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Per-pixel boolean region.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        if bits.len() != pixels {
            return Err(Error::InvalidArgument(format!(
                "expected {pixels} bits for {width}x{height} mask, got {}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        Self::new(width, height, vec![false; pixels])
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        let pixels = check_dims(width, height)?;
        Self::new(width, height, vec![true; pixels])
    }

    pub fn from_rect(width: usize, height: usize, rect: Rect) -> Result<Self> {
        let mut mask = Self::empty(width, height)?;
        if !rect.fits_in(width, height) {
            return Err(Error::InvalidArgument(format!(
                "{rect:?} does not fit a {width}x{height} mask"
            )));
        }
        for y in rect.y..rect.y + rect.height {
            mask.bits[y * width + rect.x..y * width + rect.x + rect.width].fill(true);
        }
        Ok(mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Number of set pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when no pixel is set.
    pub fn is_clear(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Fraction of the raster that is set.
    pub fn area_fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    fn ensure_same(&self, other: &BinaryMask) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: self.dimensions(),
                actual: other.dimensions(),
            });
        }
        Ok(())
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> Result<usize> {
        self.ensure_same(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count())
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.ensure_same(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        BinaryMask::new(self.width, self.height, bits)
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> Result<bool> {
        self.ensure_same(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b))
    }
}

/// BT.601 luma, rounded to nearest.
pub fn to_grayscale(img: &ImageBuffer) -> GrayBuffer {
    let data = img
        .data
        .chunks_exact(CHANNELS)
        .map(|px| {
            let luma = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
            luma.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayBuffer {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Mean over a `side`x`side` window centered on each pixel.
///
/// Windows are clipped at the borders and averaged over in-image cells only.
/// The square mean is computed as a row pass followed by a column pass; both
/// passes divide by the clipped extent, which equals the 2-D clipped mean.
pub fn box_smooth(h: &HeatMap, side: usize) -> Result<HeatMap> {
    if side == 0 || side % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "smoothing side must be odd and positive, got {side}"
        )));
    }
    if side == 1 {
        return Ok(h.clone());
    }
    let (w, ht) = h.dimensions();
    let r = side / 2;
    let (lo, hi) = h.range();

    let mut rows = vec![0.0; w * ht];
    for y in 0..ht {
        let row = &h.values[y * w..(y + 1) * w];
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            let sum: f64 = row[x0..=x1].iter().sum();
            rows[y * w + x] = sum / (x1 - x0 + 1) as f64;
        }
    }

    let mut out = vec![0.0; w * ht];
    for y in 0..ht {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(ht - 1);
        let n = (y1 - y0 + 1) as f64;
        for x in 0..w {
            let sum: f64 = (y0..=y1).map(|yy| rows[yy * w + x]).sum();
            // rounding can push a mean one ulp past the input range
            out[y * w + x] = (sum / n).clamp(lo, hi);
        }
    }
    HeatMap::new(w, ht, out)
}
