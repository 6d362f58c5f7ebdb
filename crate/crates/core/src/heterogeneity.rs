//! Spatial-heterogeneity heat map from JPEG recompression residuals.
//!
//! An image whose pixels all went through the same JPEG quality is nearly a
//! fixed point of re-encoding at that quality. Regions that came from a
//! different source quality (or were never compressed) are not, so the
//! squared residual after recompressing at the best-fitting global quality
//! highlights them.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{box_smooth, HeatMap, ImageBuffer, CHANNELS};
use crate::io::{decode_image, encode_jpeg};

/// JPEG quality factor in `1..=100`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct QualityFactor(u8);

impl QualityFactor {
    pub fn new(q: u8) -> Result<Self> {
        if (1..=100).contains(&q) {
            Ok(Self(q))
        } else {
            Err(Error::InvalidArgument(format!(
                "quality factor must be in 1..=100, got {q}"
            )))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for QualityFactor {
    type Error = Error;

    fn try_from(q: u8) -> Result<Self> {
        Self::new(q)
    }
}

impl From<QualityFactor> for u8 {
    fn from(q: QualityFactor) -> u8 {
        q.0
    }
}

impl fmt::Display for QualityFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Quality sweep and smoothing for the recompression analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdConfig {
    /// Candidate qualities, strictly increasing.
    pub sweep: Vec<QualityFactor>,
    /// Odd smoothing side; `None` derives it from the image size.
    pub smooth_side: Option<usize>,
}

impl Default for CdConfig {
    fn default() -> Self {
        Self {
            sweep: [30, 40, 50, 60, 70, 80, 90].map(QualityFactor).to_vec(),
            smooth_side: None,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(Error::InvalidArgument("quality sweep is empty".into()));
        }
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "quality sweep must be strictly increasing, got {:?}",
                self.sweep.iter().map(|q| q.get()).collect::<Vec<_>>()
            )));
        }
        if let Some(side) = self.smooth_side {
            if side < 3 || side % 2 == 0 {
                return Err(Error::InvalidArgument(format!(
                    "smoothing side must be odd and at least 3, got {side}"
                )));
            }
        }
        Ok(())
    }

    /// Smoothing side for a `width`x`height` image: the explicit value, or
    /// `2 * floor(min(w, h) / delta) + 1`, at least 3.
    pub fn smooth_side_for(&self, width: usize, height: usize, delta: usize) -> usize {
        self.smooth_side
            .unwrap_or_else(|| (2 * (width.min(height) / delta.max(1)) + 1).max(3))
    }
}

/// Encodes at quality `q` (4:4:4 baseline JPEG) and decodes again.
pub fn recompress(img: &ImageBuffer, q: QualityFactor) -> Result<ImageBuffer> {
    let bytes = encode_jpeg(img, q)?;
    let out = decode_image(&bytes)?;
    if out.dimensions() != img.dimensions() {
        return Err(Error::Codec(format!(
            "decoder returned {:?} for a {:?} image",
            out.dimensions(),
            img.dimensions()
        )));
    }
    Ok(out)
}

/// Per-pixel mean over channels of the squared sample difference.
pub fn residual_map(orig: &ImageBuffer, rec: &ImageBuffer) -> Result<HeatMap> {
    if orig.dimensions() != rec.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: orig.dimensions(),
            actual: rec.dimensions(),
        });
    }
    let values = orig
        .data()
        .chunks_exact(CHANNELS)
        .zip(rec.data().chunks_exact(CHANNELS))
        .map(|(a, b)| {
            let sum: i32 = a
                .iter()
                .zip(b)
                .map(|(&x, &y)| {
                    let d = i32::from(x) - i32::from(y);
                    d * d
                })
                .sum();
            f64::from(sum) / CHANNELS as f64
        })
        .collect();
    HeatMap::new(orig.width(), orig.height(), values)
}

/// Median of all values; even counts average the two middle elements.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if values.len() % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower_max + upper) / 2.0
    }
}

/// Smoothed residual at one quality together with its median score.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub quality: QualityFactor,
    pub median: f64,
    pub smoothed: HeatMap,
}

/// Recompresses at every sweep quality, in sweep order.
pub fn quality_sweep(img: &ImageBuffer, cfg: &CdConfig, smooth_side: usize) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    cfg.sweep
        .par_iter()
        .map(|&q| {
            let rec = recompress(img, q)?;
            let smoothed = box_smooth(&residual_map(img, &rec)?, smooth_side)?;
            Ok(SweepPoint {
                quality: q,
                median: median(smoothed.values()),
                smoothed,
            })
        })
        .collect()
}

/// Lowest median wins; ties go to the highest quality.
fn best_fit(points: &[SweepPoint]) -> &SweepPoint {
    let mut best = &points[0];
    for p in &points[1..] {
        if p.median <= best.median {
            best = p;
        }
    }
    best
}

/// Sweep member whose recompression residual has the smallest median.
pub fn estimate_global_quality(img: &ImageBuffer, cfg: &CdConfig, delta: usize) -> Result<QualityFactor> {
    let side = cfg.smooth_side_for(img.width(), img.height(), delta);
    let points = quality_sweep(img, cfg, side)?;
    Ok(best_fit(&points).quality)
}

/// Raw recompression heat map at the estimated global quality.
pub fn cd_heatmap(img: &ImageBuffer, cfg: &CdConfig, delta: usize) -> Result<HeatMap> {
    cd_analysis(img, cfg, delta).map(|(_, h)| h)
}

/// Estimated global quality and the heat map measured at it.
pub fn cd_analysis(img: &ImageBuffer, cfg: &CdConfig, delta: usize) -> Result<(QualityFactor, HeatMap)> {
    let side = cfg.smooth_side_for(img.width(), img.height(), delta);
    let points = quality_sweep(img, cfg, side)?;
    let best = best_fit(&points);
    Ok((best.quality, best.smoothed.clone()))
}
