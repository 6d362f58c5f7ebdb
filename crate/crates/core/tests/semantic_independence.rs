mod common;

use common::{entropy_oracle, mi_oracle};
use pad_core::fixtures::{compose_adversarial, PatchSource, PatchSpec, Transform};
use pad_core::image::{to_grayscale, GrayBuffer, ImageBuffer, Rect};
use pad_core::mi::{joint_histogram, mi_heatmap, mutual_information, tile_grid, MiConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn window_samples(g: &GrayBuffer, r: Rect) -> Vec<u8> {
    let mut out = Vec::with_capacity(r.area());
    for y in r.y..r.y + r.height {
        for x in r.x..r.x + r.width {
            out.push(g.get(x, y));
        }
    }
    out
}

/// Two 8x8 windows side by side; levels drawn from a few clusters so that
/// the pairs span independent to strongly dependent.
fn random_pair(rng: &mut ChaCha8Rng) -> GrayBuffer {
    let spread: u8 = rng.random_range(1..=255);
    let coupling: f64 = rng.random();
    let mut data = vec![0u8; 16 * 8];
    for y in 0..8 {
        for x in 0..8 {
            let a: u8 = rng.random_range(0..=spread);
            let b = if rng.random_bool(coupling) { a } else { rng.random_range(0..=spread) };
            data[y * 16 + x] = a;
            data[y * 16 + x + 8] = b;
        }
    }
    GrayBuffer::new(16, 8, data).unwrap()
}

#[test]
fn pair_mi_matches_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (a, b) = (Rect::new(0, 0, 8, 8), Rect::new(8, 0, 8, 8));
    for bins in [2, 8, 32] {
        for _ in 0..100 {
            let g = random_pair(&mut rng);
            let got = mutual_information(&joint_histogram(&g, a, b, bins).unwrap());
            let want = mi_oracle(&window_samples(&g, a), &window_samples(&g, b), bins);
            assert!((got - want).abs() <= 1e-12, "B={bins}: {got} vs {want}");
        }
    }
}

#[test]
fn mi_is_symmetric_nonnegative_and_self_mi_is_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (a, b) = (Rect::new(0, 0, 8, 8), Rect::new(8, 0, 8, 8));
    for _ in 0..100 {
        let g = random_pair(&mut rng);
        let bins = [2, 8, 32][rng.random_range(0..3)];
        let ab = mutual_information(&joint_histogram(&g, a, b, bins).unwrap());
        let ba = mutual_information(&joint_histogram(&g, b, a, bins).unwrap());
        assert!(ab >= 0.0);
        assert!((ab - ba).abs() <= 1e-12);
        let aa = mutual_information(&joint_histogram(&g, a, a, bins).unwrap());
        assert!((aa - entropy_oracle(&window_samples(&g, a), bins)).abs() <= 1e-12);
    }
}

#[test]
fn heatmap_is_neighbor_average_of_pairwise_mi() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    // ragged edges on both axes exercise the common-size cropping
    let img = ImageBuffer::from_fn(70, 45, |x, y| {
        let base = ((x / 5 + y / 7) * 23 % 256) as u8;
        [base, base.wrapping_add(rng.random_range(0..40)), rng.random()]
    })
    .unwrap();
    let cfg = MiConfig {
        window: 16,
        ..MiConfig::default()
    };
    let h = mi_heatmap(&img, &cfg).unwrap();
    let g = to_grayscale(&img);
    let grid = tile_grid(70, 45, 16).unwrap();
    for (t, &tile) in grid.tiles().iter().enumerate() {
        assert!(entropy_oracle(&window_samples(&g, tile), cfg.bins) >= cfg.flat_entropy_floor);
        let neighbors = grid.neighbors(t);
        let mut sum = 0.0;
        for &n in neighbors {
            let other = grid.tiles()[n];
            let (w, hh) = (tile.width.min(other.width), tile.height.min(other.height));
            let a = window_samples(&g, Rect::new(tile.x, tile.y, w, hh));
            let b = window_samples(&g, Rect::new(other.x, other.y, w, hh));
            sum += mi_oracle(&a, &b, cfg.bins);
        }
        let want = sum / neighbors.len() as f64;
        for y in tile.y..tile.y + tile.height {
            for x in tile.x..tile.x + tile.width {
                assert!((h.get(x, y) - want).abs() <= 1e-12, "tile {t} at ({x},{y})");
            }
        }
    }
}

#[test]
fn tiles_cover_every_pixel_once() {
    for (w, h, d) in [(64, 64, 32), (70, 45, 16), (33, 100, 32), (5, 5, 2)] {
        let grid = tile_grid(w, h, d).unwrap();
        let mut hits = vec![0u8; w * h];
        for r in grid.tiles() {
            for y in r.y..r.y + r.height {
                for x in r.x..r.x + r.width {
                    hits[y * w + x] += 1;
                }
            }
        }
        assert!(hits.iter().all(|&c| c == 1), "{w}x{h} d={d}");
        assert_eq!(grid.tiles().iter().map(Rect::area).sum::<usize>(), w * h);
    }
}

fn noise_image(seed: u64, side: usize) -> ImageBuffer {
    let base = ImageBuffer::filled(side, side, [0, 0, 0]).unwrap();
    let spec = PatchSpec {
        source: PatchSource::Noise {
            seed,
            width: side,
            height: side,
        },
        location: (0, 0),
        transform: Transform::IDENTITY,
    };
    compose_adversarial(&base, &spec).unwrap().adversarial
}

// Independent neighbors carry no information, but the plug-in estimator on
// 1024 samples over a 32x32 table is biased upward by roughly
// (B-1)^2 / (2 N ln 2) ~ 0.68 bits; the measured values sit just below that.
#[test]
fn noise_mi_is_the_plug_in_floor() {
    let bias = 31.0f64.powi(2) / (2.0 * 1024.0 * std::f64::consts::LN_2);
    for seed in 0..20 {
        let h = mi_heatmap(&noise_image(seed, 256), &MiConfig::default()).unwrap();
        let (lo, hi) = h.range();
        assert!(lo > 0.3 && hi < bias, "seed {seed}: {lo}..{hi}");
    }
}

#[test]
fn larger_windows_shrink_the_noise_floor() {
    let img = noise_image(5, 256);
    let floor = |d| {
        mi_heatmap(&img, &MiConfig { window: d, ..MiConfig::default() })
            .unwrap()
            .range()
            .1
    };
    let (a, b, c) = (floor(32), floor(64), floor(128));
    assert!(a > b && b > c, "{a} {b} {c}");
    assert!(b < 0.2);
}
