//! Binary erosion, dilation, opening and closing with square structuring elements.
//!
//! A side-`s` element covers offsets `lo..=hi` on each axis with
//! `lo = -(s / 2)` and `hi = s - 1 - s / 2`, so odd sides are centered and
//! even sides lean toward the top-left. Dilation uses the reflected element,
//! which makes erosion and dilation an adjoint pair: opening is then the union
//! of every element placement that fits inside the mask, and closing is its
//! dual. Cells outside the image never veto an erosion and never feed a
//! dilation.

use crate::error::{Error, Result};
use crate::image::BinaryMask;

/// Square all-ones structuring element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StructuringElement {
    side: usize,
}

impl StructuringElement {
    pub fn square(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidArgument("structuring element side must be at least 1".into()));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Offsets `(lo, hi)` covered on each axis, relative to the anchor.
    pub fn extent(&self) -> (isize, isize) {
        let lo = -((self.side / 2) as isize);
        (lo, lo + self.side as isize - 1)
    }
}

/// 1-D pass: each output looks at inputs `i + lo ..= i + hi`, clipped.
/// `all` selects erosion (every in-range input set) over dilation (any set).
fn pass_1d(line: &[bool], lo: isize, hi: isize, all: bool, out: &mut [bool]) {
    let n = line.len() as isize;
    // prefix counts of set cells
    let mut prefix = Vec::with_capacity(line.len() + 1);
    prefix.push(0usize);
    for &b in line {
        prefix.push(prefix.last().unwrap() + usize::from(b));
    }
    for (i, o) in out.iter_mut().enumerate() {
        let a = (i as isize + lo).clamp(0, n);
        let b = (i as isize + hi + 1).clamp(0, n);
        let set = prefix[b as usize] - prefix[a as usize];
        *o = if all {
            set == (b - a) as usize
        } else {
            set > 0
        };
    }
}

fn separable(m: &BinaryMask, lo: isize, hi: isize, all: bool) -> BinaryMask {
    let (w, h) = m.dimensions();
    let bits = m.bits();
    let mut rows = vec![false; w * h];
    for y in 0..h {
        pass_1d(&bits[y * w..(y + 1) * w], lo, hi, all, &mut rows[y * w..(y + 1) * w]);
    }
    let mut out = vec![false; w * h];
    let mut column = vec![false; h];
    let mut result = vec![false; h];
    for x in 0..w {
        for y in 0..h {
            column[y] = rows[y * w + x];
        }
        pass_1d(&column, lo, hi, all, &mut result);
        for y in 0..h {
            out[y * w + x] = result[y];
        }
    }
    BinaryMask::new(w, h, out).expect("same dimensions")
}

pub fn erode(m: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let (lo, hi) = se.extent();
    separable(m, lo, hi, true)
}

pub fn dilate(m: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let (lo, hi) = se.extent();
    separable(m, -hi, -lo, false)
}

/// Erosion followed by dilation.
pub fn morph_open(m: &BinaryMask, se: StructuringElement) -> BinaryMask {
    dilate(&erode(m, se), se)
}

/// Dilation followed by erosion.
pub fn morph_close(m: &BinaryMask, se: StructuringElement) -> BinaryMask {
    erode(&dilate(m, se), se)
}
