//! Semantic-independence heat map from neighbor-window mutual information.
//!
//! The image is tiled into non-overlapping `d`x`d` windows. Each window is
//! compared with its up/down/left/right neighbors by the mutual information of
//! their gray levels, pairing pixels that sit at the same offset inside each
//! window. A window's heat is the mean over its neighbors, painted over the
//! whole window. Windows that carry almost no information of their own
//! (entropy below a floor) would otherwise look maximally independent, so they
//! are assigned the largest heat observed on the image instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{to_grayscale, GrayBuffer, HeatMap, ImageBuffer, Rect};

/// Parameters of the sliding-window mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiConfig {
    /// Window side `d` in pixels.
    pub window: usize,
    /// Histogram bins per axis.
    pub bins: usize,
    /// Windows whose own entropy (bits) is below this are treated as flat.
    pub flat_entropy_floor: f64,
}

impl Default for MiConfig {
    fn default() -> Self {
        Self {
            window: 32,
            bins: 32,
            flat_entropy_floor: 0.05,
        }
    }
}

impl MiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidArgument(format!(
                "window side must be at least 2, got {}",
                self.window
            )));
        }
        if !(2..=256).contains(&self.bins) {
            return Err(Error::InvalidArgument(format!(
                "bins must be in 2..=256, got {}",
                self.bins
            )));
        }
        if !(self.flat_entropy_floor >= 0.0 && self.flat_entropy_floor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "flat entropy floor must be finite and nonnegative, got {}",
                self.flat_entropy_floor
            )));
        }
        Ok(())
    }
}

/// Non-overlapping tiling of an image with 4-neighborhood adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowGrid {
    window: usize,
    cols: usize,
    rows: usize,
    tiles: Vec<Rect>,
    neighbors: Vec<Vec<usize>>,
}

impl WindowGrid {
    pub fn window(&self) -> usize {
        self.window
    }

    /// `(columns, rows)` of the grid.
    pub fn shape(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    /// Tiles in row-major order.
    pub fn tiles(&self) -> &[Rect] {
        &self.tiles
    }

    /// Indices of the tiles above, below, left and right of `tile`, in that
    /// order, skipping those outside the grid.
    pub fn neighbors(&self, tile: usize) -> &[usize] {
        &self.neighbors[tile]
    }
}

/// Tiles a `width`x`height` image with stride `d`; the last column and row are
/// clipped to the image.
pub fn tile_grid(width: usize, height: usize, d: usize) -> Result<WindowGrid> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "window side must be at least 2, got {d}"
        )));
    }
    if d > width.min(height) {
        return Err(Error::InvalidArgument(format!(
            "window side {d} exceeds image {width}x{height}"
        )));
    }
    let cols = width.div_ceil(d);
    let rows = height.div_ceil(d);
    let mut tiles = Vec::with_capacity(cols * rows);
    let mut neighbors = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (c * d, r * d);
            tiles.push(Rect::new(x, y, d.min(width - x), d.min(height - y)));
            let mut n = Vec::with_capacity(4);
            if r > 0 {
                n.push((r - 1) * cols + c);
            }
            if r + 1 < rows {
                n.push((r + 1) * cols + c);
            }
            if c > 0 {
                n.push(r * cols + c - 1);
            }
            if c + 1 < cols {
                n.push(r * cols + c + 1);
            }
            neighbors.push(n);
        }
    }
    Ok(WindowGrid {
        window: d,
        cols,
        rows,
        tiles,
        neighbors,
    })
}

/// Co-occurrence counts of binned gray levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointHistogram {
    bins: usize,
    counts: Vec<u64>,
    total: u64,
}

impl JointHistogram {
    /// Builds a table from explicit `bins`x`bins` counts (row = first window).
    pub fn from_counts(bins: usize, counts: Vec<u64>) -> Result<Self> {
        if bins == 0 || counts.len() != bins * bins {
            return Err(Error::InvalidArgument(format!(
                "expected {} counts for {bins} bins, got {}",
                bins * bins,
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyWindow);
        }
        Ok(Self {
            bins,
            counts,
            total,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.bins + b]
    }

    pub fn transposed(&self) -> JointHistogram {
        let b = self.bins;
        let counts = (0..b * b).map(|i| self.counts[(i % b) * b + i / b]).collect();
        JointHistogram {
            bins: b,
            counts,
            total: self.total,
        }
    }

    fn marginals(&self) -> (Vec<u64>, Vec<u64>) {
        let b = self.bins;
        let mut rows = vec![0u64; b];
        let mut cols = vec![0u64; b];
        for (i, row) in self.counts.chunks_exact(b).enumerate() {
            for (j, &c) in row.iter().enumerate() {
                rows[i] += c;
                cols[j] += c;
            }
        }
        (rows, cols)
    }

    /// Shannon entropy (bits) of the first window's binned levels.
    pub fn row_entropy(&self) -> f64 {
        entropy_bits(&self.marginals().0, self.total)
    }
}

#[inline]
fn bin_of(v: u8, bins: usize) -> usize {
    usize::from(v) * bins / 256
}

/// Pairs the pixels of `a` and `b` at equal offsets over their common size
/// and counts binned level pairs.
pub fn joint_histogram(g: &GrayBuffer, a: Rect, b: Rect, bins: usize) -> Result<JointHistogram> {
    if !(2..=256).contains(&bins) {
        return Err(Error::InvalidArgument(format!(
            "bins must be in 2..=256, got {bins}"
        )));
    }
    for r in [a, b] {
        if !r.fits_in(g.width(), g.height()) {
            return Err(Error::InvalidArgument(format!(
                "window {r:?} outside {}x{} image",
                g.width(),
                g.height()
            )));
        }
    }
    let w = a.width.min(b.width);
    let h = a.height.min(b.height);
    if w == 0 || h == 0 {
        return Err(Error::EmptyWindow);
    }
    let mut counts = vec![0u64; bins * bins];
    for dy in 0..h {
        for dx in 0..w {
            let va = bin_of(g.get(a.x + dx, a.y + dy), bins);
            let vb = bin_of(g.get(b.x + dx, b.y + dy), bins);
            counts[va * bins + vb] += 1;
        }
    }
    Ok(JointHistogram {
        bins,
        counts,
        total: (w * h) as u64,
    })
}

fn entropy_bits(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Mutual information in bits of the normalized table.
pub fn mutual_information(jh: &JointHistogram) -> f64 {
    let (rows, cols) = jh.marginals();
    let n = jh.total as f64;
    let b = jh.bins;
    let mut mi = 0.0;
    for (row, &r) in jh.counts.chunks_exact(b).zip(&rows) {
        for (&c, &col) in row.iter().zip(&cols) {
            if c == 0 {
                continue;
            }
            let p = c as f64 / n;
            let ratio = (c as f64 * n) / (r as f64 * col as f64);
            mi += p * ratio.log2();
        }
    }
    mi.max(0.0)
}

/// Raw neighbor-averaged mutual information, constant on each window.
pub fn mi_heatmap(img: &ImageBuffer, cfg: &MiConfig) -> Result<HeatMap> {
    cfg.validate()?;
    let gray = to_grayscale(img);
    let grid = tile_grid(gray.width(), gray.height(), cfg.window)?;
    let tiles = grid.tiles();
    if tiles.len() < 2 {
        return Err(Error::DegenerateGrid { tiles: tiles.len() });
    }

    // each adjacent pair once; the table for (b, a) is the transpose of (a, b)
    let mut pairs: Vec<(usize, usize)> = (0..tiles.len())
        .flat_map(|t| {
            grid.neighbors(t)
                .iter()
                .filter(move |&&n| n > t)
                .map(move |&n| (t, n))
        })
        .collect();
    pairs.sort_unstable();
    let pair_mi: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| joint_histogram(&gray, tiles[a], tiles[b], cfg.bins).map(|jh| mutual_information(&jh)))
        .collect::<Result<_>>()?;
    let lookup = |a: usize, b: usize| {
        let key = (a.min(b), a.max(b));
        let idx = pairs.binary_search(&key).expect("adjacent pair enumerated");
        pair_mi[idx]
    };

    let flat: Vec<bool> = tiles
        .par_iter()
        .map(|&t| {
            joint_histogram(&gray, t, t, cfg.bins).map(|jh| jh.row_entropy() < cfg.flat_entropy_floor)
        })
        .collect::<Result<_>>()?;

    let mut heat: Vec<f64> = (0..tiles.len())
        .map(|t| {
            let n = grid.neighbors(t);
            n.iter().map(|&o| lookup(t, o)).sum::<f64>() / n.len() as f64
        })
        .collect();
    let ceiling = heat
        .iter()
        .zip(&flat)
        .filter(|(_, &f)| !f)
        .map(|(&v, _)| v)
        .fold(0.0, f64::max);
    for (v, _) in heat.iter_mut().zip(&flat).filter(|(_, &f)| f) {
        *v = ceiling;
    }

    let (w, h) = (gray.width(), gray.height());
    let mut values = vec![0.0; w * h];
    for (tile, &v) in tiles.iter().zip(&heat) {
        for y in tile.y..tile.y + tile.height {
            values[y * w + tile.x..y * w + tile.x + tile.width].fill(v);
        }
    }
    HeatMap::new(w, h, values)
}
