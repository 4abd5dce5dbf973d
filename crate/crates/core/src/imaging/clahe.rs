//! Contrast-limited adaptive histogram equalization.
//!
//! Each channel is split into a grid of tiles. Every tile gets its own
//! equalization lookup table built from a clipped histogram, and output
//! pixels blend the four nearest tile tables bilinearly.

use serde::{Deserialize, Serialize};

use super::{Depth, ImageError, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaheParams {
    pub tiles_x: usize,
    pub tiles_y: usize,
    /// Clip threshold as a multiple of the mean bin count of a tile.
    pub clip_limit: f64,
    pub bins: usize,
}

impl Default for ClaheParams {
    fn default() -> Self {
        Self {
            tiles_x: 8,
            tiles_y: 8,
            clip_limit: 2.0,
            bins: 256,
        }
    }
}

impl ClaheParams {
    pub fn validate(&self) -> Result<(), ImageError> {
        if self.tiles_x == 0 || self.tiles_y == 0 {
            return Err(ImageError::InvalidParams("tile grid must be at least 1x1".into()));
        }
        if !(self.clip_limit >= 1.0) || !self.clip_limit.is_finite() {
            return Err(ImageError::InvalidParams(format!(
                "clip_limit must be finite and >= 1.0, got {}",
                self.clip_limit
            )));
        }
        if !(2..=256).contains(&self.bins) {
            return Err(ImageError::InvalidParams(format!("bins must be in 2..=256, got {}", self.bins)));
        }
        Ok(())
    }

    /// Per-bin clip level as a fraction of a tile's pixels.
    pub fn clip_fraction(&self) -> f64 {
        self.clip_limit / self.bins as f64
    }
}

#[inline]
fn tile_span(t: usize, len: usize, tiles: usize) -> (usize, usize) {
    (t * len / tiles, (t + 1) * len / tiles)
}

#[inline]
fn bin_of(v: u8, bins: usize) -> usize {
    v as usize * bins / 256
}

/// Clips a normalized histogram at `limit` and spreads the excess evenly over all bins.
fn clip_and_redistribute(hist: &mut [f64], limit: f64) {
    let mut excess = 0.0;
    for h in hist.iter_mut() {
        if *h > limit {
            excess += *h - limit;
            *h = limit;
        }
    }
    let each = excess / hist.len() as f64;
    for h in hist.iter_mut() {
        *h += each;
    }
}

fn channel_plane(img: &RasterImage, channel: usize) -> Vec<u8> {
    let bytes = img.as_bytes().expect("checked Byte depth");
    bytes.iter().skip(channel).step_by(img.channels()).copied().collect()
}

fn check_input(img: &RasterImage, params: &ClaheParams) -> Result<(), ImageError> {
    params.validate()?;
    if img.depth() != Depth::Byte {
        return Err(ImageError::WrongDepth { expected: Depth::Byte });
    }
    if img.width() < params.tiles_x || img.height() < params.tiles_y {
        return Err(ImageError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            tiles_x: params.tiles_x,
            tiles_y: params.tiles_y,
        });
    }
    Ok(())
}

fn tile_histograms_of_plane(plane: &[u8], w: usize, h: usize, params: &ClaheParams) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(params.tiles_x * params.tiles_y);
    for ty in 0..params.tiles_y {
        let (y0, y1) = tile_span(ty, h, params.tiles_y);
        for tx in 0..params.tiles_x {
            let (x0, x1) = tile_span(tx, w, params.tiles_x);
            let mut counts = vec![0u32; params.bins];
            for y in y0..y1 {
                for &v in &plane[y * w + x0..y * w + x1] {
                    counts[bin_of(v, params.bins)] += 1;
                }
            }
            let total = ((x1 - x0) * (y1 - y0)) as f64;
            let mut hist: Vec<f64> = counts.iter().map(|&n| n as f64 / total).collect();
            clip_and_redistribute(&mut hist, params.clip_fraction());
            out.push(hist);
        }
    }
    out
}

/// Clipped and redistributed histograms of every tile of one channel, in
/// row-major tile order. Bins hold fractions of the tile's pixels.
pub fn clipped_tile_histograms(
    img: &RasterImage,
    channel: usize,
    params: &ClaheParams,
) -> Result<Vec<Vec<f64>>, ImageError> {
    check_input(img, params)?;
    let plane = channel_plane(img, channel);
    Ok(tile_histograms_of_plane(&plane, img.width(), img.height(), params))
}

/// Fractional tile coordinate of a pixel, clamped so edge pixels use the outermost tiles.
#[inline]
fn tile_coord(p: usize, len: usize, tiles: usize) -> (usize, usize, f64) {
    let f = ((p as f64 + 0.5) * tiles as f64 / len as f64 - 0.5).clamp(0.0, (tiles - 1) as f64);
    let t0 = f.floor() as usize;
    (t0, (t0 + 1).min(tiles - 1), f - t0 as f64)
}

pub fn clahe(img: &RasterImage, params: &ClaheParams) -> Result<RasterImage, ImageError> {
    check_input(img, params)?;
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut out = vec![0u8; w * h * c];
    let xs: Vec<_> = (0..w).map(|x| tile_coord(x, w, params.tiles_x)).collect();
    let ys: Vec<_> = (0..h).map(|y| tile_coord(y, h, params.tiles_y)).collect();

    for ch in 0..c {
        let plane = channel_plane(img, ch);
        let hists = tile_histograms_of_plane(&plane, w, h, params);
        // Tables hold whole output levels.
        let luts: Vec<Vec<f64>> = hists
            .iter()
            .map(|hist| {
                let mut cdf = 0.0;
                hist.iter()
                    .map(|&p| {
                        cdf += p;
                        (cdf * 255.0).round().min(255.0)
                    })
                    .collect()
            })
            .collect();

        for (y, &(ty0, ty1, ay)) in ys.iter().enumerate() {
            for (x, &(tx0, tx1, ax)) in xs.iter().enumerate() {
                let b = bin_of(plane[y * w + x], params.bins);
                let lut = |tx: usize, ty: usize| luts[ty * params.tiles_x + tx][b];
                let top = (1.0 - ax) * lut(tx0, ty0) + ax * lut(tx1, ty0);
                let bottom = (1.0 - ax) * lut(tx0, ty1) + ax * lut(tx1, ty1);
                let v = (1.0 - ay) * top + ay * bottom;
                out[(y * w + x) * c + ch] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    RasterImage::from_bytes(w, h, c, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::channel_histograms;
    use proptest::prelude::*;

    fn noisy(w: usize, h: usize, c: usize, seed: u64, lo: u8, span: u8) -> RasterImage {
        let mut s = seed;
        let data = (0..w * h * c)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                lo + ((s >> 33) % span as u64) as u8
            })
            .collect();
        RasterImage::from_bytes(w, h, c, data).unwrap()
    }

    #[test]
    fn rejects_invalid_inputs() {
        let p = ClaheParams::default();
        let tiny = RasterImage::filled(4, 20, 3, 10).unwrap();
        assert!(matches!(clahe(&tiny, &p), Err(ImageError::ImageTooSmall { .. })));
        let unit = RasterImage::from_unit(16, 16, 1, vec![0.5; 256]).unwrap();
        assert!(matches!(clahe(&unit, &p), Err(ImageError::WrongDepth { .. })));
        let bad = ClaheParams {
            clip_limit: 0.5,
            ..p
        };
        assert!(clahe(&RasterImage::filled(16, 16, 1, 0).unwrap(), &bad).is_err());
    }

    #[test]
    fn constant_image_stays_constant() {
        for v in [0u8, 13, 128, 255] {
            let img = RasterImage::filled(37, 29, 3, v).unwrap();
            let out = clahe(&img, &ClaheParams::default()).unwrap();
            let first = out.as_bytes().unwrap()[0];
            assert!(out.as_bytes().unwrap().iter().all(|&x| x == first));
        }
    }

    #[test]
    fn clipped_histograms_respect_bound_and_mass() {
        let img = noisy(64, 48, 3, 7, 100, 20);
        let params = ClaheParams::default();
        let (w, h) = (img.width(), img.height());
        for ch in 0..3 {
            let hists = clipped_tile_histograms(&img, ch, &params).unwrap();
            for ty in 0..params.tiles_y {
                for tx in 0..params.tiles_x {
                    // Brute-force tally of the tile straight from pixel coordinates.
                    let (x0, x1) = (tx * w / params.tiles_x, (tx + 1) * w / params.tiles_x);
                    let (y0, y1) = (ty * h / params.tiles_y, (ty + 1) * h / params.tiles_y);
                    let mut raw = vec![0u32; 256];
                    for y in y0..y1 {
                        for x in x0..x1 {
                            raw[img.sample(x, y, ch) as usize] += 1;
                        }
                    }
                    let pixels = ((x1 - x0) * (y1 - y0)) as f64;
                    let limit = params.clip_limit / 256.0;
                    let excess: f64 = raw.iter().map(|&n| (n as f64 / pixels - limit).max(0.0)).sum();
                    let bound = limit + excess / 256.0 + 1e-12;

                    let got = &hists[ty * params.tiles_x + tx];
                    assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    assert!(got.iter().all(|&p| p <= bound), "tile ({tx},{ty}) exceeds {bound}");
                }
            }
        }
    }

    #[test]
    fn smear_histograms_flatten() {
        let img = crate::synth::smear_image(180, 180, 4, 11);
        let before = channel_histograms(&img).unwrap();
        let after = channel_histograms(&clahe(&img, &ClaheParams::default()).unwrap()).unwrap();
        for c in 0..3 {
            assert!(
                after.bin_variance(c) < before.bin_variance(c),
                "channel {c}: {} !< {}",
                after.bin_variance(c),
                before.bin_variance(c)
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn preserves_shape(w in 8usize..40, h in 8usize..40, c in prop::sample::select(vec![1usize, 3]), seed in any::<u64>()) {
            let img = noisy(w, h, c, seed, 0, 255);
            let out = clahe(&img, &ClaheParams::default()).unwrap();
            prop_assert_eq!((out.width(), out.height(), out.channels()), (w, h, c));
        }
    }
}
