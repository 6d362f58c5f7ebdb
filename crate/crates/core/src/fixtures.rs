//! Synthetic patched images with exact ground-truth masks.
//!
//! A patch replaces a rectangle of the base image outright: outside the
//! rectangle the composite equals the base bit for bit. Patches are scaled by
//! nearest neighbor and rotated by quarter turns only, so the ground truth
//! stays an exact axis-aligned rectangle.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heterogeneity::{recompress, QualityFactor};
use crate::image::{BinaryMask, ImageBuffer, Rect};
use crate::io::{save_image, save_mask};

/// Nearest-neighbor scale applied to a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scale {
    Half,
    One,
    Double,
}

impl Scale {
    fn apply(self, n: usize) -> usize {
        match self {
            Scale::Half => n / 2,
            Scale::One => n,
            Scale::Double => n * 2,
        }
    }
}

/// Clockwise quarter-turn rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transform {
    pub scale: Scale,
    pub rotation: Rotation,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        scale: Scale::One,
        rotation: Rotation::R0,
    };

    /// Placed size of a `width`x`height` patch.
    pub fn output_size(&self, width: usize, height: usize) -> (usize, usize) {
        let (w, h) = (self.scale.apply(width), self.scale.apply(height));
        match self.rotation {
            Rotation::R0 | Rotation::R180 => (w, h),
            Rotation::R90 | Rotation::R270 => (h, w),
        }
    }

    pub fn apply(&self, patch: &ImageBuffer) -> Result<ImageBuffer> {
        let (sw, sh) = (self.scale.apply(patch.width()), self.scale.apply(patch.height()));
        if sw == 0 || sh == 0 {
            return Err(Error::InvalidArgument(format!(
                "patch {}x{} vanishes under {:?}",
                patch.width(),
                patch.height(),
                self.scale
            )));
        }
        let src = |x: usize, y: usize| -> (usize, usize) {
            match self.scale {
                Scale::Half => (x * 2, y * 2),
                Scale::One => (x, y),
                Scale::Double => (x / 2, y / 2),
            }
        };
        let (ow, oh) = self.output_size(patch.width(), patch.height());
        ImageBuffer::from_fn(ow, oh, |x, y| {
            // position in the scaled (unrotated) patch
            let (sx, sy) = match self.rotation {
                Rotation::R0 => (x, y),
                Rotation::R90 => (y, sh - 1 - x),
                Rotation::R180 => (sw - 1 - x, sh - 1 - y),
                Rotation::R270 => (sw - 1 - y, x),
            };
            let (px, py) = src(sx, sy);
            patch.pixel(px, py)
        })
    }
}

/// What gets pasted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatchSource {
    /// Uniform RGB noise of the given size.
    Noise { seed: u64, width: usize, height: usize },
    /// A region of another image.
    Crop { image: ImageBuffer, rect: Rect },
    /// The base's own region at `rect`, round-tripped through JPEG at `quality`.
    QualityMismatch { rect: Rect, quality: QualityFactor },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchKind {
    Noise,
    Crop,
    Quality,
}

impl PatchSource {
    pub fn kind(&self) -> PatchKind {
        match self {
            PatchSource::Noise { .. } => PatchKind::Noise,
            PatchSource::Crop { .. } => PatchKind::Crop,
            PatchSource::QualityMismatch { .. } => PatchKind::Quality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchSpec {
    pub source: PatchSource,
    /// Top-left corner of the placed patch.
    pub location: (usize, usize),
    pub transform: Transform,
}

/// Provenance of a fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub kind: PatchKind,
    pub placed: Rect,
    pub transform: Transform,
    pub quality: Option<QualityFactor>,
    pub base: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub adversarial: ImageBuffer,
    pub gt_mask: BinaryMask,
    pub meta: FixtureMeta,
}

fn noise_patch(seed: u64, width: usize, height: usize) -> Result<ImageBuffer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(3))
        .ok_or_else(|| Error::DimensionOverflow(format!("{width}x{height}")))?;
    ImageBuffer::new(width, height, (0..n).map(|_| rng.random()).collect())
}

/// Pastes the transformed patch into `base`; the ground truth is the placed rectangle.
pub fn compose_adversarial(base: &ImageBuffer, spec: &PatchSpec) -> Result<Fixture> {
    let (patch, quality, seed) = match &spec.source {
        PatchSource::Noise { seed, width, height } => {
            if *width == 0 || *height == 0 {
                return Err(Error::InvalidArgument(format!("noise patch {width}x{height} is empty")));
            }
            (noise_patch(*seed, *width, *height)?, None, *seed)
        }
        PatchSource::Crop { image, rect } => (image.crop(*rect)?, None, 0),
        PatchSource::QualityMismatch { rect, quality } => {
            (recompress(&base.crop(*rect)?, *quality)?, Some(*quality), 0)
        }
    };
    let placed_patch = spec.transform.apply(&patch)?;
    let (x, y) = spec.location;
    let placed = Rect::new(x, y, placed_patch.width(), placed_patch.height());
    if !placed.fits_in(base.width(), base.height()) {
        return Err(Error::InvalidArgument(format!(
            "patch {placed:?} is out of bounds for a {}x{} image",
            base.width(),
            base.height()
        )));
    }
    let mut adversarial = base.clone();
    adversarial.paste(&placed_patch, x, y)?;
    Ok(Fixture {
        gt_mask: BinaryMask::from_rect(base.width(), base.height(), placed)?,
        adversarial,
        meta: FixtureMeta {
            kind: spec.source.kind(),
            placed,
            transform: spec.transform,
            quality,
            base: 0,
            seed,
        },
    })
}

/// Knobs of [`make_fixture_set_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOptions {
    /// Patch kinds, cycled by fixture index.
    pub kinds: Vec<PatchKind>,
    /// Inclusive range of patch area as a fraction of the image.
    pub area: (f64, f64),
    /// Bases are round-tripped through JPEG at this quality first.
    pub base_quality: Option<QualityFactor>,
    /// Quality of `Quality` patches.
    pub patch_quality: QualityFactor,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            kinds: vec![PatchKind::Noise, PatchKind::Crop, PatchKind::Quality],
            area: (0.10, 0.20),
            base_quality: QualityFactor::new(80).ok(),
            patch_quality: QualityFactor::new(30).expect("valid quality"),
        }
    }
}

/// Per-fixture seed derived from the set seed (splitmix64 step).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` fixtures cycling noise, crop and quality patches with default options.
pub fn make_fixture_set(bases: &[ImageBuffer], n: usize, seed: u64) -> Result<Vec<Fixture>> {
    make_fixture_set_with(bases, n, seed, &FixtureOptions::default())
}

pub fn make_fixture_set_with(
    bases: &[ImageBuffer],
    n: usize,
    seed: u64,
    opts: &FixtureOptions,
) -> Result<Vec<Fixture>> {
    if n == 0 {
        return Err(Error::InvalidArgument("fixture count must be at least 1".into()));
    }
    if bases.is_empty() {
        return Err(Error::InvalidArgument("no base images".into()));
    }
    if opts.kinds.is_empty() {
        return Err(Error::InvalidArgument("no patch kinds".into()));
    }
    let (lo, hi) = opts.area;
    if !(0.0 < lo && lo <= hi && hi < 1.0) {
        return Err(Error::InvalidArgument(format!("area range {lo}..{hi} is invalid")));
    }
    let prepared: Vec<ImageBuffer> = match opts.base_quality {
        Some(q) => bases.iter().map(|b| recompress(b, q)).collect::<Result<_>>()?,
        None => bases.to_vec(),
    };

    (0..n)
        .map(|i| {
            let fixture_seed = derive_seed(seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(fixture_seed);
            let base_index = i % bases.len();
            let base = &prepared[base_index];
            let kind = opts.kinds[i % opts.kinds.len()];
            let donor = &bases[(i + 1) % bases.len()];
            let spec = sample_spec(&mut rng, base, donor, kind, opts)?;
            let mut fixture = compose_adversarial(base, &spec)?;
            fixture.meta.base = base_index;
            fixture.meta.seed = fixture_seed;
            Ok(fixture)
        })
        .collect()
}

fn sample_spec(
    rng: &mut ChaCha8Rng,
    base: &ImageBuffer,
    donor: &ImageBuffer,
    kind: PatchKind,
    opts: &FixtureOptions,
) -> Result<PatchSpec> {
    let (w, h) = base.dimensions();
    let area = (w * h) as f64;
    let (lo, hi) = opts.area;
    for _ in 0..1000 {
        let target = rng.random_range(lo..=hi) * area;
        let aspect: f64 = rng.random_range(0.6..1.6);
        let transform = if kind == PatchKind::Quality {
            Transform::IDENTITY
        } else {
            Transform {
                scale: [Scale::Half, Scale::One, Scale::Double][rng.random_range(0..3)],
                rotation: [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270][rng.random_range(0..4)],
            }
        };
        let mut pw = (target * aspect).sqrt().round() as usize;
        let mut ph = (target / pw.max(1) as f64).round() as usize;
        if transform.scale == Scale::Double {
            pw -= pw % 2;
            ph -= ph % 2;
        }
        let frac = (pw * ph) as f64 / area;
        if pw == 0 || ph == 0 || pw > w || ph > h || frac < lo || frac > hi {
            continue;
        }
        // pre-transform size that lands exactly on pw x ph
        let (rw, rh) = match transform.rotation {
            Rotation::R0 | Rotation::R180 => (pw, ph),
            Rotation::R90 | Rotation::R270 => (ph, pw),
        };
        let (sw, sh) = match transform.scale {
            Scale::Half => (rw * 2, rh * 2),
            Scale::One => (rw, rh),
            Scale::Double => (rw / 2, rh / 2),
        };
        let location = (rng.random_range(0..=w - pw), rng.random_range(0..=h - ph));
        let source = match kind {
            PatchKind::Noise => PatchSource::Noise {
                seed: rng.random(),
                width: sw,
                height: sh,
            },
            PatchKind::Crop => {
                if sw > donor.width() || sh > donor.height() {
                    continue;
                }
                let rect = Rect::new(
                    rng.random_range(0..=donor.width() - sw),
                    rng.random_range(0..=donor.height() - sh),
                    sw,
                    sh,
                );
                PatchSource::Crop {
                    image: donor.clone(),
                    rect,
                }
            }
            PatchKind::Quality => PatchSource::QualityMismatch {
                rect: Rect::new(location.0, location.1, pw, ph),
                quality: opts.patch_quality,
            },
        };
        return Ok(PatchSpec {
            source,
            location,
            transform,
        });
    }
    Err(Error::InvalidArgument(format!(
        "could not place a patch of {lo}..{hi} area in a {w}x{h} image"
    )))
}

/// One line of a fixture manifest. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub image: String,
    pub masks: Vec<String>,
    pub kind: PatchKind,
    pub seed: u64,
}

/// Writes `fixture_NNNN.png`, `fixture_NNNN.gt.png` and `manifest.jsonl`
/// into `dir`; returns the manifest path.
pub fn write_fixture_set(fixtures: &[Fixture], dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::Unwritable {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let manifest = dir.join("manifest.jsonl");
    let mut lines = String::new();
    for (i, f) in fixtures.iter().enumerate() {
        let image = format!("fixture_{i:04}.png");
        let mask = format!("fixture_{i:04}.gt.png");
        save_image(&f.adversarial, dir.join(&image))?;
        save_mask(&f.gt_mask, dir.join(&mask))?;
        let record = ManifestRecord {
            image,
            masks: vec![mask],
            kind: f.meta.kind,
            seed: f.meta.seed,
        };
        lines.push_str(&serde_json::to_string(&record).expect("record serializes"));
        lines.push('\n');
    }
    let mut file = File::create(&manifest).map_err(|e| Error::Unwritable {
        path: manifest.clone(),
        message: e.to_string(),
    })?;
    file.write_all(lines.as_bytes()).map_err(|e| Error::Unwritable {
        path: manifest.clone(),
        message: e.to_string(),
    })?;
    Ok(manifest)
}

/// Parses a JSON-lines manifest, skipping blank lines.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(record);
    }
    Ok(out)
}
