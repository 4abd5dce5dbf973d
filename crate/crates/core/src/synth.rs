//! Procedural images with known ground truth.
//!
//! All generators are pure functions of their arguments, so fixtures are
//! identical across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::RasterImage;
use crate::watershed::BinaryMask;

/// A disk as `(center_x, center_y, radius)` in pixels.
pub type Disk = (f64, f64, f64);

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[inline]
fn inside(disks: &[Disk], x: usize, y: usize) -> bool {
    disks
        .iter()
        .any(|&(cx, cy, r)| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r)
}

pub fn disks_mask(w: usize, h: usize, disks: &[Disk]) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| inside(disks, x, y))
}

/// Flat three-channel image: `fg` inside any disk, `bg` elsewhere.
pub fn disks_image(w: usize, h: usize, disks: &[Disk], bg: u8, fg: u8) -> RasterImage {
    let data = (0..w * h)
        .flat_map(|i| {
            let v = if inside(disks, i % w, i / w) { fg } else { bg };
            [v; 3]
        })
        .collect();
    RasterImage::from_bytes(w, h, 3, data).expect("length matches")
}

/// Two radius-20 disks whose centers are 30 px apart, dark on a light background.
pub fn overlapping_disks() -> (RasterImage, BinaryMask) {
    let disks = [(50.0, 50.0, 20.0), (80.0, 50.0, 20.0)];
    (disks_image(130, 100, &disks, 220, 80), disks_mask(130, 100, &disks))
}

/// Label-free stand-in for a stained smear: a pale, low-contrast background
/// with `cells` soft purple blobs and mild noise.
pub fn smear_image(w: usize, h: usize, cells: usize, seed: u64) -> RasterImage {
    let mut r = rng(seed, 0);
    let blobs: Vec<(f64, f64, f64)> = (0..cells)
        .map(|_| {
            let rad = r.gen_range(0.08..0.14) * w.min(h) as f64;
            (r.gen_range(rad..w as f64 - rad), r.gen_range(rad..h as f64 - rad), rad)
        })
        .collect();
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let mut t = 0.0f64;
            for &(cx, cy, rad) in &blobs {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() / rad;
                t = t.max((1.0 - d).clamp(0.0, 1.0).powf(0.5));
            }
            let base = [200.0, 170.0, 185.0];
            let cell = [150.0, 110.0, 160.0];
            for c in 0..3 {
                let v = base[c] * (1.0 - t) + cell[c] * t + r.gen_range(-4.0..4.0);
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::from_bytes(w, h, 3, data).expect("length matches")
}

pub const PATTERN_CLASSES: usize = 9;
pub const PATTERN_SIZE: usize = 64;

/// One sample of a nine-class toy dataset. Each class pairs its own color
/// with its own texture; samples vary in phase, brightness and noise.
pub fn pattern_image(class: usize, index: u64, seed: u64) -> RasterImage {
    assert!(class < PATTERN_CLASSES, "class out of range");
    const COLORS: [[f64; 3]; PATTERN_CLASSES] = [
        [200.0, 60.0, 60.0],
        [60.0, 180.0, 70.0],
        [60.0, 80.0, 210.0],
        [210.0, 200.0, 60.0],
        [190.0, 70.0, 200.0],
        [60.0, 200.0, 200.0],
        [230.0, 140.0, 40.0],
        [130.0, 130.0, 130.0],
        [120.0, 60.0, 30.0],
    ];
    let mut r = rng(seed, (class as u64) << 32 | index);
    let phase = r.gen_range(0.0..std::f64::consts::TAU);
    let gain = r.gen_range(0.85..1.15);
    let (ox, oy) = (r.gen_range(0.0..64.0), r.gen_range(0.0..64.0));
    let n = PATTERN_SIZE;
    let mut data = Vec::with_capacity(n * n * 3);
    for y in 0..n {
        for x in 0..n {
            let (fx, fy) = (x as f64, y as f64);
            let texture = match class {
                0 => (fx * 0.5 + phase).sin(),
                1 => (fy * 0.5 + phase).sin(),
                2 => ((fx + fy) * 0.35 + phase).sin(),
                3 => (((fx + ox) / 8.0).floor() + ((fy + oy) / 8.0).floor()).rem_euclid(2.0) * 2.0 - 1.0,
                4 => {
                    let d = (((fx + ox) % 16.0) - 8.0).hypot(((fy + oy) % 16.0) - 8.0);
                    if d < 4.0 { 1.0 } else { -1.0 }
                }
                5 => ((fx - 32.0).hypot(fy - 32.0) * 0.4 + phase).sin(),
                6 => fx / 32.0 - 1.0,
                7 => ((fx - fy) * 0.35 + phase).sin(),
                _ => 0.0,
            };
            for c in 0..3 {
                let v = COLORS[class][c] * gain * (1.0 + 0.25 * texture) + r.gen_range(-12.0..12.0);
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::from_bytes(n, n, 3, data).expect("length matches")
}

/// Disks of a colored "cell" over gray noise, with the exact foreground mask.
pub fn disk_scene(size: usize, index: u64, seed: u64) -> (RasterImage, BinaryMask) {
    let mut r = rng(seed, index);
    let count = r.gen_range(1..=4);
    let s = size as f64;
    let disks: Vec<Disk> = (0..count)
        .map(|_| {
            let rad = r.gen_range(0.08..0.16) * s;
            (r.gen_range(rad..s - rad), r.gen_range(rad..s - rad), rad)
        })
        .collect();
    let mask = disks_mask(size, size, &disks);
    let mut data = Vec::with_capacity(size * size * 3);
    for &fg in &mask.bits {
        let base: [f64; 3] = if fg { [190.0, 80.0, 150.0] } else { [110.0, 110.0, 110.0] };
        let jitter = r.gen_range(-30.0..30.0);
        for b in base {
            data.push((b + jitter + r.gen_range(-15.0..15.0)).round().clamp(0.0, 255.0) as u8);
        }
    }
    (RasterImage::from_bytes(size, size, 3, data).expect("length matches"), mask)
}
