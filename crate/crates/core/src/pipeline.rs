//! The full defense: heat maps, fusion, proposal matching and removal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{localize_detailed, FusionConfig, Localization};
use crate::heterogeneity::{cd_analysis, CdConfig, QualityFactor};
use crate::image::{BinaryMask, HeatMap, ImageBuffer};
use crate::mi::{mi_heatmap, MiConfig};
use crate::refine::{
    connected_components, inpaint_black, ioa, match_masks, provide_regions, RegionProviderSpec,
};

/// Every numeric hyperparameter of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mi: MiConfig,
    pub cd: CdConfig,
    pub fusion: FusionConfig,
    /// IoA a proposal needs against the localization map to be kept.
    pub t_m: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mi: MiConfig::default(),
            cd: CdConfig::default(),
            fusion: FusionConfig::default(),
            t_m: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.mi.validate()?;
        self.cd.validate()?;
        self.fusion.validate()?;
        if !(0.0..=1.0).contains(&self.t_m) {
            return Err(Error::InvalidArgument(format!("t_m must be in [0, 1], got {}", self.t_m)));
        }
        Ok(())
    }
}

/// Heat maps and the localization derived from them.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub h_mi: HeatMap,
    pub h_cd: HeatMap,
    pub estimated_quality: QualityFactor,
    pub localization: Localization,
}

impl Analysis {
    /// The binary localization map.
    pub fn h_p(&self) -> &BinaryMask {
        &self.localization.mask
    }
}

pub fn analyze(img: &ImageBuffer, cfg: &PipelineConfig) -> Result<Analysis> {
    cfg.validate()?;
    let h_mi = mi_heatmap(img, &cfg.mi)?;
    let (estimated_quality, h_cd) = cd_analysis(img, &cfg.cd, cfg.fusion.delta)?;
    let localization = localize_detailed(&h_mi, &h_cd, &cfg.fusion)?;
    Ok(Analysis {
        h_mi,
        h_cd,
        estimated_quality,
        localization,
    })
}

/// Outcome of [`defend`].
#[derive(Debug, Clone)]
pub struct Defense {
    pub analysis: Analysis,
    pub proposals: usize,
    /// No proposal reached `t_m`, so the localization map was used as is.
    pub fell_back: bool,
    /// Set when the configured provider failed and components were used instead.
    pub provider_degraded: Option<String>,
    pub mask: BinaryMask,
    pub defended: ImageBuffer,
}

/// Localizes patches in `img` and blacks them out.
///
/// `stem` names the image for the directory provider. A failing sidecar
/// degrades to connected components; other provider failures are returned.
pub fn defend(
    img: &ImageBuffer,
    stem: &str,
    cfg: &PipelineConfig,
    provider: &RegionProviderSpec,
) -> Result<Defense> {
    let analysis = analyze(img, cfg)?;
    let h_p = analysis.h_p();
    let (proposals, provider_degraded) = match provide_regions(provider, img, stem, h_p) {
        Ok(set) => (set, None),
        Err(e @ (Error::Provider { kind: "sidecar", .. } | Error::ProtocolViolation(_))) => {
            (connected_components(h_p), Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let mut fell_back = true;
    for m in proposals.masks() {
        if ioa(m, h_p)? >= cfg.t_m {
            fell_back = false;
            break;
        }
    }
    let mask = match_masks(&proposals, h_p, cfg.t_m)?;
    let defended = inpaint_black(img, &mask)?;
    Ok(Defense {
        proposals: proposals.len(),
        fell_back,
        provider_degraded,
        mask,
        defended,
        analysis,
    })
}
