//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pad_core::image::{BinaryMask, HeatMap, ImageBuffer};
use pad_core::io::load_image;
use rand::Rng;

pub fn photo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/photos")
}

/// The bundled photographs, sorted by file name.
pub fn photos() -> Vec<(String, ImageBuffer)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(photo_dir())
        .expect("photo corpus present")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, load_image(&p).unwrap())
        })
        .collect()
}

fn bin(v: u8, bins: usize) -> usize {
    v as usize * bins / 256
}

/// Plug-in mutual information in bits from paired samples.
pub fn mi_oracle(a: &[u8], b: &[u8], bins: usize) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut pa: BTreeMap<usize, f64> = BTreeMap::new();
    let mut pb: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        let (i, j) = (bin(x, bins), bin(y, bins));
        *joint.entry((i, j)).or_default() += 1.0;
        *pa.entry(i).or_default() += 1.0;
        *pb.entry(j).or_default() += 1.0;
    }
    let mut mi = 0.0;
    for (&(i, j), &c) in &joint {
        let pij = c / n;
        mi += pij * (pij / ((pa[&i] / n) * (pb[&j] / n))).log2();
    }
    mi.max(0.0)
}

/// Shannon entropy in bits of the binned samples.
pub fn entropy_oracle(a: &[u8], bins: usize) -> f64 {
    let n = a.len() as f64;
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for &x in a {
        *counts.entry(bin(x, bins)).or_default() += 1.0;
    }
    -counts.values().map(|&c| (c / n) * (c / n).log2()).sum::<f64>()
}

/// Linear-interpolation quantile over an insertion-sorted copy.
pub fn quantile_oracle(values: &[f64], p: f64) -> f64 {
    let mut s: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        let at = s.partition_point(|&x| x <= v);
        s.insert(at, v);
    }
    let n = s.len();
    let i = ((n - 1) as f64 * p).floor() as usize;
    let j = (n - 1) as f64 * p - i as f64;
    if i == n - 1 {
        s[n - 1]
    } else {
        (1.0 - j) * s[i] + j * s[i + 1]
    }
}

fn se_offsets(side: usize) -> Vec<(isize, isize)> {
    let lo = -((side / 2) as isize);
    let hi = side as isize - 1 - (side / 2) as isize;
    let mut out = Vec::new();
    for dy in lo..=hi {
        for dx in lo..=hi {
            out.push((dx, dy));
        }
    }
    out
}

fn at(m: &BinaryMask, x: isize, y: isize) -> Option<bool> {
    if x < 0 || y < 0 || x >= m.width() as isize || y >= m.height() as isize {
        None
    } else {
        Some(m.get(x as usize, y as usize))
    }
}

/// Every in-image cell under the element must be set.
pub fn erode_oracle(m: &BinaryMask, side: usize) -> BinaryMask {
    let offs = se_offsets(side);
    let mut out = BinaryMask::empty(m.width(), m.height()).unwrap();
    for y in 0..m.height() {
        for x in 0..m.width() {
            let keep = offs
                .iter()
                .all(|&(dx, dy)| at(m, x as isize + dx, y as isize + dy).unwrap_or(true));
            out.set(x, y, keep);
        }
    }
    out
}

/// Union of the element stamped at every set cell.
pub fn dilate_oracle(m: &BinaryMask, side: usize) -> BinaryMask {
    let offs = se_offsets(side);
    let mut out = BinaryMask::empty(m.width(), m.height()).unwrap();
    for y in 0..m.height() {
        for x in 0..m.width() {
            if !m.get(x, y) {
                continue;
            }
            for &(dx, dy) in &offs {
                let (tx, ty) = (x as isize + dx, y as isize + dy);
                if at(m, tx, ty).is_some() {
                    out.set(tx as usize, ty as usize, true);
                }
            }
        }
    }
    out
}

pub fn open_oracle(m: &BinaryMask, side: usize) -> BinaryMask {
    dilate_oracle(&erode_oracle(m, side), side)
}

pub fn close_oracle(m: &BinaryMask, side: usize) -> BinaryMask {
    erode_oracle(&dilate_oracle(m, side), side)
}

/// 8-connected components by flood fill, sorted by their first raster pixel.
pub fn components_oracle(m: &BinaryMask) -> Vec<BinaryMask> {
    let (w, h) = m.dimensions();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !m.get(x, y) || seen[y * w + x] {
                continue;
            }
            let mut comp = BinaryMask::empty(w, h).unwrap();
            let mut stack = vec![(x, y)];
            seen[y * w + x] = true;
            while let Some((cx, cy)) = stack.pop() {
                comp.set(cx, cy, true);
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (nx, ny) = (cx as isize + dx, cy as isize + dy);
                        if at(m, nx, ny) == Some(true) && !seen[ny as usize * w + nx as usize] {
                            seen[ny as usize * w + nx as usize] = true;
                            stack.push((nx as usize, ny as usize));
                        }
                    }
                }
            }
            out.push(comp);
        }
    }
    out
}

pub fn random_mask(rng: &mut impl Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    let bits = (0..w * h).map(|_| rng.random_bool(density)).collect();
    BinaryMask::new(w, h, bits).unwrap()
}

pub fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Medians of `h` inside and outside `m`.
pub fn inside_outside_medians(h: &HeatMap, m: &BinaryMask) -> (f64, f64) {
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for y in 0..h.height() {
        for x in 0..h.width() {
            if m.get(x, y) {
                inside.push(h.get(x, y));
            } else {
                outside.push(h.get(x, y));
            }
        }
    }
    (median_of(inside), median_of(outside))
}
