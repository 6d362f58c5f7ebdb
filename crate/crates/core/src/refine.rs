//! Turning the coarse localization map into the final patch mask: region
//! proposals, intersection-over-area matching, and black-fill removal.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, ImageBuffer, CHANNELS};
use crate::io::{encode_png, load_mask};
use crate::rle::{self, Run};

/// Where a proposal set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalSource {
    Components,
    Directory,
    Sidecar,
}

/// Image-sized, nonempty candidate regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionProposalSet {
    masks: Vec<BinaryMask>,
    source: ProposalSource,
}

impl RegionProposalSet {
    /// Fails if any mask is empty or differs in size from `dims`.
    pub fn new(masks: Vec<BinaryMask>, source: ProposalSource, dims: (usize, usize)) -> Result<Self> {
        for (i, m) in masks.iter().enumerate() {
            if m.dimensions() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: m.dimensions(),
                });
            }
            if m.is_clear() {
                return Err(Error::InvalidArgument(format!("proposal {i} is empty")));
            }
        }
        Ok(Self { masks, source })
    }

    pub fn masks(&self) -> &[BinaryMask] {
        &self.masks
    }

    pub fn source(&self) -> ProposalSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }
}

/// 8-connected components, ordered by their first pixel in raster order.
pub fn connected_components(m: &BinaryMask) -> RegionProposalSet {
    let (w, h) = m.dimensions();
    let mut label = vec![usize::MAX; w * h];
    let mut masks = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !m.bits()[start] || label[start] != usize::MAX {
            continue;
        }
        let id = masks.len();
        let mut bits = vec![false; w * h];
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            bits[i] = true;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if m.bits()[j] && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        masks.push(BinaryMask::new(w, h, bits).expect("same dimensions"));
    }
    RegionProposalSet {
        masks,
        source: ProposalSource::Components,
    }
}

/// Intersection over the area of `mask`: `|mask ∩ h_p| / |mask|`.
pub fn ioa(mask: &BinaryMask, h_p: &BinaryMask) -> Result<f64> {
    let area = mask.count();
    if area == 0 {
        return Err(Error::InvalidArgument("IoA of an empty mask".into()));
    }
    Ok(mask.intersection_count(h_p)? as f64 / area as f64)
}

/// Union of the proposals whose IoA with `h_p` is at least `t_m`; `h_p`
/// itself when nothing matches.
pub fn match_masks(proposals: &RegionProposalSet, h_p: &BinaryMask, t_m: f64) -> Result<BinaryMask> {
    let mut out: Option<BinaryMask> = None;
    for m in proposals.masks() {
        if ioa(m, h_p)? >= t_m {
            out = Some(match out {
                Some(acc) => acc.union(m)?,
                None => m.clone(),
            });
        }
    }
    Ok(out.unwrap_or_else(|| h_p.clone()))
}

/// Sets every masked pixel to black.
pub fn inpaint_black(img: &ImageBuffer, mask: &BinaryMask) -> Result<ImageBuffer> {
    if img.dimensions() != mask.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: img.dimensions(),
            actual: mask.dimensions(),
        });
    }
    let mut data = img.data().to_vec();
    for (px, &b) in data.chunks_exact_mut(CHANNELS).zip(mask.bits()) {
        if b {
            px.fill(0);
        }
    }
    ImageBuffer::new(img.width(), img.height(), data)
}

/// Default sidecar request timeout.
pub const DEFAULT_SIDECAR_TIMEOUT: Duration = Duration::from_secs(30);

/// Source of region proposals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionProviderSpec {
    /// Connected components of the localization map.
    Components,
    /// Pre-computed `<stem>.mask.<N>.png` files in a directory.
    Directory(PathBuf),
    /// A segmentation service speaking the `/segment` protocol.
    Sidecar { endpoint: String, timeout: Duration },
}

impl RegionProviderSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Components => "components",
            Self::Directory(_) => "directory",
            Self::Sidecar { .. } => "sidecar",
        }
    }
}

impl FromStr for RegionProviderSpec {
    type Err = Error;

    /// Parses `components`, `dir:PATH` or `sidecar:URL`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "components" {
            Ok(Self::Components)
        } else if let Some(path) = s.strip_prefix("dir:").filter(|p| !p.is_empty()) {
            Ok(Self::Directory(PathBuf::from(path)))
        } else if let Some(url) = s.strip_prefix("sidecar:").filter(|u| !u.is_empty()) {
            Ok(Self::Sidecar {
                endpoint: url.to_string(),
                timeout: DEFAULT_SIDECAR_TIMEOUT,
            })
        } else {
            Err(Error::InvalidArgument(format!(
                "provider must be components, dir:PATH or sidecar:URL, got {s:?}"
            )))
        }
    }
}

impl fmt::Display for RegionProviderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Components => f.write_str("components"),
            Self::Directory(p) => write!(f, "dir:{}", p.display()),
            Self::Sidecar { endpoint, .. } => write!(f, "sidecar:{endpoint}"),
        }
    }
}

/// Body of `POST /segment`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub width: usize,
    pub height: usize,
    /// Base64 of the PNG-encoded image.
    pub image_b64: String,
}

impl SegmentRequest {
    pub fn for_image(img: &ImageBuffer) -> Result<Self> {
        Ok(Self {
            width: img.width(),
            height: img.height(),
            image_b64: base64::engine::general_purpose::STANDARD.encode(encode_png(img)?),
        })
    }
}

/// One mask of a segmentation response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub rle: Vec<Run>,
}

/// Body returned by `POST /segment`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub masks: Vec<RleMask>,
}

impl SegmentResponse {
    pub fn from_masks(masks: &[BinaryMask]) -> Self {
        Self {
            masks: masks.iter().map(|m| RleMask { rle: rle::encode(m) }).collect(),
        }
    }

    /// Decodes every mask at `width`x`height`; empty masks are dropped.
    pub fn decode(&self, width: usize, height: usize) -> Result<Vec<BinaryMask>> {
        let mut out = Vec::with_capacity(self.masks.len());
        for m in &self.masks {
            let mask = rle::decode(&m.rle, width, height)?;
            if !mask.is_clear() {
                out.push(mask);
            }
        }
        Ok(out)
    }
}

/// Sends one segmentation request to `endpoint` (the service base URL).
pub fn request_segmentation(endpoint: &str, img: &ImageBuffer, timeout: Duration) -> Result<Vec<BinaryMask>> {
    let provider_err = |message: String| Error::Provider {
        kind: "sidecar",
        message,
    };
    let url = format!("{}/segment", endpoint.trim_end_matches('/'));
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into();
    let request = SegmentRequest::for_image(img)?;
    let mut response = agent
        .post(&url)
        .send_json(&request)
        .map_err(|e| provider_err(format!("{url}: {e}")))?;
    let body: SegmentResponse = response
        .body_mut()
        .read_json()
        .map_err(|e| Error::ProtocolViolation(format!("malformed response from {url}: {e}")))?;
    body.decode(img.width(), img.height())
}

fn directory_masks(dir: &Path, stem: &str, dims: (usize, usize)) -> Result<Vec<BinaryMask>> {
    let provider_err = |message: String| Error::Provider {
        kind: "directory",
        message,
    };
    let entries = std::fs::read_dir(dir).map_err(|e| provider_err(format!("{}: {e}", dir.display())))?;
    let prefix = format!("{stem}.mask.");
    let mut found: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| provider_err(format!("{}: {e}", dir.display())))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let index = name
            .strip_prefix(&prefix)
            .and_then(|rest| rest.strip_suffix(".png"))
            .and_then(|n| n.parse::<u64>().ok());
        if let Some(n) = index {
            found.push((n, entry.path()));
        }
    }
    found.sort();
    let mut masks = Vec::with_capacity(found.len());
    for (_, path) in found {
        let mask = load_mask(&path)?;
        if mask.dimensions() != dims {
            return Err(provider_err(format!(
                "{} is {:?}, image is {dims:?}",
                path.display(),
                mask.dimensions()
            )));
        }
        if !mask.is_clear() {
            masks.push(mask);
        }
    }
    Ok(masks)
}

/// Collects proposals for an image named `stem` from the configured source.
pub fn provide_regions(
    spec: &RegionProviderSpec,
    img: &ImageBuffer,
    stem: &str,
    h_p: &BinaryMask,
) -> Result<RegionProposalSet> {
    let dims = img.dimensions();
    match spec {
        RegionProviderSpec::Components => Ok(connected_components(h_p)),
        RegionProviderSpec::Directory(dir) => {
            RegionProposalSet::new(directory_masks(dir, stem, dims)?, ProposalSource::Directory, dims)
        }
        RegionProviderSpec::Sidecar { endpoint, timeout } => RegionProposalSet::new(
            request_segmentation(endpoint, img, *timeout)?,
            ProposalSource::Sidecar,
            dims,
        ),
    }
}
