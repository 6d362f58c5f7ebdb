//! Scoring defense masks against ground truth.
//!
//! A ground-truth patch counts as localized when at least half of it lies
//! inside the defense mask. Patch localization recall pools these flags over
//! every patch of the whole set. Pixel precision, recall and IoU are
//! reported alongside as diagnostics: a mask that blankets the image scores
//! perfect patch recall but poor pixel precision.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fixtures::{read_manifest, ManifestRecord};
use crate::image::BinaryMask;
use crate::io::{load_image, load_mask};
use crate::pipeline::{defend, PipelineConfig};
use crate::refine::{ioa, RegionProviderSpec};

/// IoA a ground-truth patch needs against the defense mask to count as found.
pub const PATCH_FOUND_IOA: f64 = 0.5;

/// 1 when at least half of `gt` is covered by `defense`.
pub fn patch_flag(gt: &BinaryMask, defense: &BinaryMask) -> Result<u8> {
    if gt.is_clear() {
        return Err(Error::InvalidArgument("ground-truth mask is empty".into()));
    }
    Ok(u8::from(ioa(gt, defense)? >= PATCH_FOUND_IOA))
}

/// Fraction of set flags.
pub fn recall_patch(flags: &[u8]) -> Result<f64> {
    if flags.is_empty() {
        return Err(Error::InvalidArgument("no patches to score".into()));
    }
    Ok(flags.iter().map(|&f| f64::from(f)).sum::<f64>() / flags.len() as f64)
}

/// Pixel-level overlap of a defense mask with the union of ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub iou: f64,
}

/// Set-overlap scores; empty denominators count as perfect.
pub fn pixel_metrics(gt_union: &BinaryMask, defense: &BinaryMask) -> Result<PixelMetrics> {
    let inter = gt_union.intersection_count(defense)? as f64;
    let gt = gt_union.count() as f64;
    let def = defense.count() as f64;
    let union = gt + def - inter;
    let ratio = |num: f64, den: f64| if den == 0.0 { 1.0 } else { num / den };
    Ok(PixelMetrics {
        precision: ratio(inter, def),
        recall: ratio(inter, gt),
        iou: ratio(inter, union),
    })
}

/// Scores for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalRecord {
    pub image: String,
    pub flags: Vec<u8>,
    pub pixel: Option<PixelMetrics>,
    pub masked_fraction: Option<f64>,
    pub estimated_quality: Option<u8>,
    pub fell_back: bool,
    pub provider_degraded: Option<String>,
    pub error: Option<String>,
}

impl EvalRecord {
    fn failed(image: String, err: &Error) -> Self {
        Self {
            image,
            flags: Vec::new(),
            pixel: None,
            masked_fraction: None,
            estimated_quality: None,
            fell_back: false,
            provider_degraded: None,
            error: Some(err.to_string()),
        }
    }
}

/// Aggregate over a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalReport {
    pub images: usize,
    pub failed: usize,
    pub patches: usize,
    /// Pooled patch localization recall; absent when no patch was scored.
    pub recall_patch: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
    pub mean_iou: Option<f64>,
    pub mean_masked_fraction: Option<f64>,
    pub config: RunConfig,
    pub records: Vec<EvalRecord>,
}

impl EvalReport {
    pub fn from_records(records: Vec<EvalRecord>, config: RunConfig) -> Self {
        let ok: Vec<&EvalRecord> = records.iter().filter(|r| r.error.is_none()).collect();
        let flags: Vec<u8> = ok.iter().flat_map(|r| r.flags.iter().copied()).collect();
        let mean = |f: &dyn Fn(&EvalRecord) -> Option<f64>| {
            let vals: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        Self {
            images: records.len(),
            failed: records.len() - ok.len(),
            patches: flags.len(),
            recall_patch: recall_patch(&flags).ok(),
            mean_precision: mean(&|r| r.pixel.map(|p| p.precision)),
            mean_recall: mean(&|r| r.pixel.map(|p| p.recall)),
            mean_iou: mean(&|r| r.pixel.map(|p| p.iou)),
            mean_masked_fraction: mean(&|r| r.masked_fraction),
            config,
            records,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<32} {:>7} {:>9} {:>9} {:>9} {:>9} {:>5}",
            "image", "found", "precision", "recall", "iou", "masked", "q"
        );
        for r in &self.records {
            if let Some(err) = &r.error {
                let _ = writeln!(out, "{:<32} FAILED: {err}", r.image);
                continue;
            }
            let found = r.flags.iter().filter(|&&f| f == 1).count();
            let _ = writeln!(
                out,
                "{:<32} {:>7} {:>9} {:>9} {:>9} {:>9} {:>5}",
                r.image,
                format!("{found}/{}", r.flags.len()),
                opt(r.pixel.map(|p| p.precision)),
                opt(r.pixel.map(|p| p.recall)),
                opt(r.pixel.map(|p| p.iou)),
                opt(r.masked_fraction),
                r.estimated_quality.map_or_else(|| "-".into(), |q| q.to_string()),
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "images            {}", self.images);
        let _ = writeln!(out, "failed            {}", self.failed);
        let _ = writeln!(out, "patches           {}", self.patches);
        let _ = writeln!(out, "recall_patch      {}", opt(self.recall_patch));
        let _ = writeln!(out, "mean precision    {}", opt(self.mean_precision));
        let _ = writeln!(out, "mean recall       {}", opt(self.mean_recall));
        let _ = writeln!(out, "mean iou          {}", opt(self.mean_iou));
        let _ = writeln!(out, "mean masked area  {}", opt(self.mean_masked_fraction));
        out
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        let unwritable = |path: &Path, e: std::io::Error| Error::Unwritable {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| unwritable(dir, e))?;
        let json = dir.join("report.json");
        let txt = dir.join("report.txt");
        std::fs::write(&json, self.to_json()).map_err(|e| unwritable(&json, e))?;
        std::fs::write(&txt, self.to_table()).map_err(|e| unwritable(&txt, e))?;
        Ok((json, txt))
    }
}

fn stem_of(image: &str) -> String {
    Path::new(image)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| image.to_string())
}

fn evaluate_one(
    root: &Path,
    record: &ManifestRecord,
    cfg: &PipelineConfig,
    provider: &RegionProviderSpec,
) -> Result<EvalRecord> {
    let img = load_image(root.join(&record.image))?;
    let gts = record
        .masks
        .iter()
        .map(|m| load_mask(root.join(m)))
        .collect::<Result<Vec<_>>>()?;
    for gt in &gts {
        if gt.dimensions() != img.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: img.dimensions(),
                actual: gt.dimensions(),
            });
        }
    }
    let defense = defend(&img, &stem_of(&record.image), cfg, provider)?;
    let flags = gts
        .iter()
        .map(|gt| patch_flag(gt, &defense.mask))
        .collect::<Result<Vec<_>>>()?;
    let mut gt_union = BinaryMask::empty(img.width(), img.height())?;
    for gt in &gts {
        gt_union = gt_union.union(gt)?;
    }
    Ok(EvalRecord {
        image: record.image.clone(),
        flags,
        pixel: Some(pixel_metrics(&gt_union, &defense.mask)?),
        masked_fraction: Some(defense.mask.area_fraction()),
        estimated_quality: Some(defense.analysis.estimated_quality.get()),
        fell_back: defense.fell_back,
        provider_degraded: defense.provider_degraded,
        error: None,
    })
}

/// Runs the defense on every manifest entry and scores it.
///
/// Per-image failures are recorded and do not stop the run.
pub fn run_eval(manifest: impl AsRef<Path>, config: &RunConfig) -> Result<EvalReport> {
    let manifest = manifest.as_ref();
    let records = read_manifest(manifest)?;
    if records.is_empty() {
        return Err(Error::InvalidInput(format!("{} lists no images", manifest.display())));
    }
    let root = manifest.parent().unwrap_or(Path::new("."));
    let pipeline = config.pipeline()?;
    let provider = config.provider_spec()?;
    let score = |r: &ManifestRecord| {
        evaluate_one(root, r, &pipeline, &provider).unwrap_or_else(|e| EvalRecord::failed(r.image.clone(), &e))
    };
    let scored: Vec<EvalRecord> = if config.jobs == 1 {
        records.iter().map(score).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| records.par_iter().map(score).collect())
    };
    Ok(EvalReport::from_records(scored, config.clone()))
}
