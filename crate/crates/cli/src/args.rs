use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pad_core::config::{parse_qualities, CONFIG_ENV};
use pad_core::ConfigOverrides;

/// Locate and black out adversarial patches without training.
#[derive(Debug, Parser)]
#[command(name = "pad", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write `<stem>.defended.png` and `<stem>.mask.png` for each input.
    Defend {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output directory.
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Export the normalized H_mi, H_cd, H_fuse and H_p rasters for each input.
    Heatmap {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Synthesize patched fixtures with ground-truth masks and a manifest.
    Synth {
        /// Base images, or directories of PNG/JPEG files.
        #[arg(required = true)]
        bases: Vec<PathBuf>,
        /// Number of fixtures.
        #[arg(short, long, default_value_t = 50)]
        n: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the defense over a manifest and score it against ground truth.
    Eval {
        manifest: PathBuf,
        /// Directory for report.json and report.txt.
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
}

/// Settings shared by every subcommand. Each flag has a config-file key of
/// the same name.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    /// Weight of the mutual-information map in the fusion.
    #[arg(long, global = true)]
    pub r_mi: Option<f64>,
    /// Quantile of the fused map used as the threshold.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// IoA a region proposal needs to join the final mask.
    #[arg(long, global = true)]
    pub t_m: Option<f64>,
    /// Divisor for the morphology kernel and smoothing sizes.
    #[arg(long, global = true)]
    pub delta: Option<usize>,
    /// Side of the mutual-information windows.
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Gray-level bins of the joint histograms.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Windows with less entropy (bits) than this count as flat.
    #[arg(long, global = true)]
    pub flat_entropy_floor: Option<f64>,
    /// Recompression qualities, comma separated and increasing.
    #[arg(long, global = true, value_parser = qualities)]
    pub qualities: Option<Qualities>,
    /// Odd smoothing side for the recompression residual.
    #[arg(long, global = true)]
    pub smooth_side: Option<usize>,
    /// Region proposals: components, dir:PATH or sidecar:URL.
    #[arg(long, global = true)]
    pub provider: Option<String>,
    /// Sidecar request timeout in seconds.
    #[arg(long, global = true)]
    pub timeout_s: Option<f64>,
    /// Also export heat maps here while defending.
    #[arg(long, global = true)]
    pub heatmaps_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for fixture synthesis.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// A whole comma-separated list; a bare `Vec` would make clap expect a
/// repeated flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qualities(pub Vec<u8>);

fn qualities(s: &str) -> Result<Qualities, String> {
    parse_qualities(s).map(Qualities).map_err(|e| e.to_string())
}

impl ConfigArgs {
    pub fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            r_mi: self.r_mi,
            p: self.p,
            t_m: self.t_m,
            delta: self.delta,
            window: self.window,
            bins: self.bins,
            flat_entropy_floor: self.flat_entropy_floor,
            qualities: self.qualities.clone().map(|q| q.0),
            smooth_side: self.smooth_side,
            provider: self.provider.clone(),
            timeout_s: self.timeout_s,
            heatmaps_dir: self.heatmaps_dir.clone(),
            jobs: self.jobs,
            seed: self.seed,
        }
    }
}
