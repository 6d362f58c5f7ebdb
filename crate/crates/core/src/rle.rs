//! Run-length coding of masks over row-major pixel indices, as carried by the
//! segmentation wire protocol: each run is `[start, len]`, runs ascending and
//! non-overlapping.

use crate::error::{Error, Result};
use crate::image::BinaryMask;

pub type Run = [u64; 2];

pub fn encode(mask: &BinaryMask) -> Vec<Run> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &b) in mask.bits().iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push([s as u64, (i - s) as u64]);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push([s as u64, (mask.bits().len() - s) as u64]);
    }
    runs
}

/// Rebuilds a `width`x`height` mask, rejecting unsorted, overlapping, empty
/// or out-of-range runs.
pub fn decode(runs: &[Run], width: usize, height: usize) -> Result<BinaryMask> {
    let pixels = width
        .checked_mul(height)
        .ok_or_else(|| Error::DimensionOverflow(format!("{width}x{height}")))?;
    let total = pixels as u64;
    let mut bits = vec![false; pixels];
    let mut next_free = 0u64;
    for &[start, len] in runs {
        if len == 0 {
            return Err(Error::ProtocolViolation(format!("zero-length run at {start}")));
        }
        if start < next_free {
            return Err(Error::ProtocolViolation(format!(
                "run at {start} overlaps or precedes the previous run ending at {next_free}"
            )));
        }
        let end = start
            .checked_add(len)
            .filter(|&e| e <= total)
            .ok_or_else(|| {
                Error::ProtocolViolation(format!(
                    "run [{start}, {len}] exceeds a {width}x{height} mask"
                ))
            })?;
        bits[start as usize..end as usize].fill(true);
        next_free = end;
    }
    BinaryMask::new(width, height, bits)
}
