//! Training-free localization and removal of adversarial patches.
//!
//! Two cues mark a pasted patch. It shares little information with the
//! windows around it ([`mi`]), and its compression history differs from the
//! rest of the image ([`heterogeneity`]). The two heat maps are fused,
//! thresholded at an image-adaptive quantile and cleaned with morphology
//! ([`fusion`]); the resulting coarse mask is matched against region
//! proposals and blacked out ([`refine`]). [`fixtures`] and [`eval`] provide
//! synthetic patched images and the localization-recall harness.
//!
//! ```no_run
//! use pad_core::{defend, io, PipelineConfig, RegionProviderSpec};
//!
//! let img = io::load_image("street.png")?;
//! let out = defend(&img, "street", &PipelineConfig::default(), &RegionProviderSpec::Components)?;
//! io::save_image(&out.defended, "street.defended.png")?;
//! io::save_mask(&out.mask, "street.mask.png")?;
//! # Ok::<(), pad_core::Error>(())
//! ```

pub mod config;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod fusion;
pub mod heterogeneity;
pub mod image;
pub mod io;
pub mod mi;
pub mod morphology;
pub mod pipeline;
pub mod refine;
pub mod rle;

pub use config::{ConfigOverrides, RunConfig};
pub use error::{Error, Result};
pub use fusion::FusionConfig;
pub use heterogeneity::{CdConfig, QualityFactor};
pub use image::{BinaryMask, GrayBuffer, HeatMap, ImageBuffer, Rect};
pub use mi::MiConfig;
pub use pipeline::{analyze, defend, Analysis, Defense, PipelineConfig};
pub use refine::RegionProviderSpec;

// The guide's code listings are compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/semantic-independence.md")]
    mod semantic_independence {}
    #[doc = include_str!("../../../book/src/spatial-heterogeneity.md")]
    mod spatial_heterogeneity {}
    #[doc = include_str!("../../../book/src/fusion.md")]
    mod fusion {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    mod refinement {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
