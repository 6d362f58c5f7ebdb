//! Flat run configuration shared by config files, command-line flags and
//! report snapshots. Keys are the kebab-case flag names.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FusionConfig;
use crate::heterogeneity::{CdConfig, QualityFactor};
use crate::mi::MiConfig;
use crate::pipeline::PipelineConfig;
use crate::refine::RegionProviderSpec;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "PAD_CONFIG";

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub r_mi: f64,
    pub p: f64,
    pub t_m: f64,
    pub delta: usize,
    pub window: usize,
    pub bins: usize,
    pub flat_entropy_floor: f64,
    pub qualities: Vec<u8>,
    pub smooth_side: Option<usize>,
    pub provider: String,
    pub timeout_s: f64,
    pub heatmaps_dir: Option<PathBuf>,
    pub jobs: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pipeline = PipelineConfig::default();
        Self {
            r_mi: pipeline.fusion.r_mi,
            p: pipeline.fusion.p,
            t_m: pipeline.t_m,
            delta: pipeline.fusion.delta,
            window: pipeline.mi.window,
            bins: pipeline.mi.bins,
            flat_entropy_floor: pipeline.mi.flat_entropy_floor,
            qualities: pipeline.cd.sweep.iter().map(|q| q.get()).collect(),
            smooth_side: None,
            provider: "components".into(),
            timeout_s: 30.0,
            heatmaps_dir: None,
            jobs: 0,
            seed: 0,
        }
    }
}

/// Partial settings: every field optional. Config files and flags both
/// deserialize into this shape.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigOverrides {
    pub r_mi: Option<f64>,
    pub p: Option<f64>,
    pub t_m: Option<f64>,
    pub delta: Option<usize>,
    pub window: Option<usize>,
    pub bins: Option<usize>,
    pub flat_entropy_floor: Option<f64>,
    pub qualities: Option<Vec<u8>>,
    pub smooth_side: Option<usize>,
    pub provider: Option<String>,
    pub timeout_s: Option<f64>,
    pub heatmaps_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

impl ConfigOverrides {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))
    }
}

/// Parses a comma-separated quality list such as `30,40,50`.
pub fn parse_qualities(s: &str) -> Result<Vec<u8>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u8>()
                .map_err(|e| Error::InvalidArgument(format!("quality {t:?}: {e}")))
        })
        .collect()
}

impl RunConfig {
    /// Applies every field that `overrides` sets.
    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &o.$field { self.$field = v.clone(); })*
            };
        }
        set!(r_mi, p, t_m, delta, window, bins, flat_entropy_floor, qualities, provider, timeout_s, jobs, seed);
        if o.smooth_side.is_some() {
            self.smooth_side = o.smooth_side;
        }
        if o.heatmaps_dir.is_some() {
            self.heatmaps_dir.clone_from(&o.heatmaps_dir);
        }
    }

    /// Defaults, then the config file (if any), then flags.
    pub fn resolve(file: Option<&Path>, flags: &ConfigOverrides) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            cfg.apply(&ConfigOverrides::from_file(path)?);
        }
        cfg.apply(flags);
        cfg.pipeline()?;
        cfg.provider_spec()?;
        Ok(cfg)
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let sweep = self
            .qualities
            .iter()
            .map(|&q| QualityFactor::new(q))
            .collect::<Result<Vec<_>>>()?;
        let cfg = PipelineConfig {
            mi: MiConfig {
                window: self.window,
                bins: self.bins,
                flat_entropy_floor: self.flat_entropy_floor,
            },
            cd: CdConfig {
                sweep,
                smooth_side: self.smooth_side,
            },
            fusion: FusionConfig {
                r_mi: self.r_mi,
                p: self.p,
                delta: self.delta,
                kernel_sides: None,
            },
            t_m: self.t_m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn provider_spec(&self) -> Result<RegionProviderSpec> {
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "timeout must be positive, got {}",
                self.timeout_s
            )));
        }
        let spec = self.provider.parse()?;
        Ok(match spec {
            RegionProviderSpec::Sidecar { endpoint, .. } => RegionProviderSpec::Sidecar {
                endpoint,
                timeout: Duration::from_secs_f64(self.timeout_s),
            },
            other => other,
        })
    }
}
