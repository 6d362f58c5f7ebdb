//! Normalization, weighted fusion, quantile thresholding and the
//! open-close-open cleanup that turn two heat maps into a patch mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, HeatMap};
pub use crate::morphology::{dilate, erode, morph_close, morph_open, StructuringElement};

/// Fusion weight, threshold quantile and morphology kernel sizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Weight of the mutual-information map; the recompression map gets `1 - r_mi`.
    pub r_mi: f64,
    /// Quantile of the fused map used as the threshold.
    pub p: f64,
    /// Kernel divisor: the base side is `round(min(w, h) / delta)`.
    pub delta: usize,
    /// Explicit sides for open, close, open; overrides `delta` when set.
    pub kernel_sides: Option<[usize; 3]>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            r_mi: 0.5,
            p: 0.8,
            delta: 80,
            kernel_sides: None,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r_mi) {
            return Err(Error::InvalidArgument(format!("r_mi must be in [0, 1], got {}", self.r_mi)));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!("p must be in [0, 1), got {}", self.p)));
        }
        if self.delta == 0 {
            return Err(Error::InvalidArgument("delta must be at least 1".into()));
        }
        if let Some(sides) = self.kernel_sides {
            if sides.contains(&0) {
                return Err(Error::InvalidArgument(format!("kernel sides must be positive, got {sides:?}")));
            }
        }
        Ok(())
    }

    /// Sides of the open, close and open elements for a `width`x`height` map:
    /// `2k`, `k`, `3k` with `k = max(1, round(min(w, h) / delta))`.
    pub fn kernel_sides_for(&self, width: usize, height: usize) -> [usize; 3] {
        if let Some(sides) = self.kernel_sides {
            return sides;
        }
        let k = ((width.min(height) as f64 / self.delta as f64).round() as usize).max(1);
        [2 * k, k, 3 * k]
    }
}

/// Min-max scaling to `[0, 255]`; a constant map becomes all zeros.
pub fn normalize_heatmap(h: &HeatMap) -> HeatMap {
    let (lo, hi) = h.range();
    let values = if hi > lo {
        let span = hi - lo;
        h.values()
            .iter()
            .map(|&v| ((v - lo) / span * 255.0).clamp(0.0, 255.0))
            .collect()
    } else {
        vec![0.0; h.values().len()]
    };
    HeatMap::new(h.width(), h.height(), values).expect("scaled values are finite")
}

/// `255 - v` for every value of a normalized map.
pub fn invert_normalized(h: &HeatMap) -> HeatMap {
    let values = h.values().iter().map(|&v| (255.0 - v).max(0.0)).collect();
    HeatMap::new(h.width(), h.height(), values).expect("inverted values are finite")
}

/// `r_mi * mi + (1 - r_mi) * cd`, pixelwise.
pub fn fuse(h_mi_norm: &HeatMap, h_cd_norm: &HeatMap, r_mi: f64) -> Result<HeatMap> {
    if h_mi_norm.dimensions() != h_cd_norm.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: h_mi_norm.dimensions(),
            actual: h_cd_norm.dimensions(),
        });
    }
    if !(0.0..=1.0).contains(&r_mi) {
        return Err(Error::InvalidArgument(format!("r_mi must be in [0, 1], got {r_mi}")));
    }
    let values = if r_mi == 1.0 {
        h_mi_norm.values().to_vec()
    } else if r_mi == 0.0 {
        h_cd_norm.values().to_vec()
    } else {
        h_mi_norm
            .values()
            .iter()
            .zip(h_cd_norm.values())
            .map(|(&a, &b)| r_mi * a + (1.0 - r_mi) * b)
            .collect()
    };
    HeatMap::new(h_mi_norm.width(), h_mi_norm.height(), values)
}

/// Linear-interpolation quantile of the sorted values:
/// `i = floor((n - 1) p)`, `j = (n - 1) p - i`, result `(1 - j) S[i] + j S[i + 1]`.
pub fn adaptive_threshold(h: &HeatMap, p: f64) -> Result<f64> {
    quantile(h.values(), p)
}

/// [`adaptive_threshold`] on a bare slice.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("quantile of an empty map".into()));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must be in [0, 1), got {p}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let pos = (n - 1) as f64 * p;
    let i = pos.floor() as usize;
    let j = pos - i as f64;
    if i >= n - 1 {
        return Ok(sorted[n - 1]);
    }
    Ok((1.0 - j) * sorted[i] + j * sorted[i + 1])
}

/// Keeps values at or above `thresh`.
pub fn binarize(h: &HeatMap, thresh: f64) -> BinaryMask {
    let bits = h.values().iter().map(|&v| v >= thresh).collect();
    BinaryMask::new(h.width(), h.height(), bits).expect("same dimensions")
}

/// Intermediate products of [`localize`], kept for inspection and export.
#[derive(Debug, Clone)]
pub struct Localization {
    pub fused: HeatMap,
    pub threshold: f64,
    pub thresholded: BinaryMask,
    pub mask: BinaryMask,
}

/// Patch localization map from the raw mutual-information and recompression maps.
pub fn localize(h_mi: &HeatMap, h_cd: &HeatMap, cfg: &FusionConfig) -> Result<BinaryMask> {
    localize_detailed(h_mi, h_cd, cfg).map(|l| l.mask)
}

/// Like [`localize`] but returns every intermediate.
///
/// The mutual-information map is inverted after normalization: low
/// information shared with the neighborhood is what marks a patch.
pub fn localize_detailed(h_mi: &HeatMap, h_cd: &HeatMap, cfg: &FusionConfig) -> Result<Localization> {
    cfg.validate()?;
    let mi = invert_normalized(&normalize_heatmap(h_mi));
    let cd = normalize_heatmap(h_cd);
    let fused = fuse(&mi, &cd, cfg.r_mi)?;
    let threshold = adaptive_threshold(&fused, cfg.p)?;
    let thresholded = binarize(&fused, threshold);

    let [open1, close, open2] = cfg.kernel_sides_for(fused.width(), fused.height());
    let mut mask = morph_open(&thresholded, StructuringElement::square(open1)?);
    mask = morph_close(&mask, StructuringElement::square(close)?);
    mask = morph_open(&mask, StructuringElement::square(open2)?);
    Ok(Localization {
        fused,
        threshold,
        thresholded,
        mask,
    })
}
