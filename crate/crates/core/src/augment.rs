//! Affine augmentation: rotation, shift, shear and zoom matrices, horizontal
//! flips, nearest-neighbor warping and a deterministic random sampler.
//!
//! Matrices act on pixel coordinates measured from the image center. The
//! translation column is stored as a fraction of (width, height) and is
//! converted to pixels when a matrix is applied to a concrete image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::RasterImage;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AugmentError {
    #[error("zoom factors must be positive (alpha={alpha}, beta={beta})")]
    NonPositiveScale { alpha: f64, beta: f64 },
    #[error("transform is singular (|det| = {det})")]
    SingularTransform { det: f64 },
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AffineSpec {
    /// Counter-clockwise rotation by `theta` radians.
    Rotation { theta: f64 },
    /// Translation by fractions of the image width and height.
    Shift { dx: f64, dy: f64 },
    /// `x' = x + lambda * y`.
    Shear { lambda: f64 },
    /// Per-axis scale.
    Zoom { alpha: f64, beta: f64 },
}

/// Homogeneous 3x3 affine transform, row-major. The bottom row is always `(0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix3(pub [[f64; 3]; 3]);

impl Matrix3 {
    pub const IDENTITY: Matrix3 = Matrix3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.0;
        (
            m[0][0] * x + m[0][1] * y + m[0][2],
            m[1][0] * x + m[1][1] * y + m[1][2],
        )
    }

    /// Determinant of the linear (upper 2x2) part.
    pub fn det2(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Result<Matrix3, AugmentError> {
        let det = self.det2();
        if det.abs() <= 1e-9 || !det.is_finite() {
            return Err(AugmentError::SingularTransform { det });
        }
        let m = &self.0;
        let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        let (tx, ty) = (m[0][2], m[1][2]);
        Ok(Matrix3([
            [ia, ib, -(ia * tx + ib * ty)],
            [ic, id, -(ic * tx + id * ty)],
            [0.0, 0.0, 1.0],
        ]))
    }

    /// The same transform with its translation converted from fractions to pixels.
    pub fn in_pixels(&self, width: usize, height: usize) -> Matrix3 {
        let mut m = *self;
        m.0[0][2] *= width as f64;
        m.0[1][2] *= height as f64;
        m
    }

    pub fn max_abs_diff(&self, other: &Matrix3) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                d = d.max((self.0[r][c] - other.0[r][c]).abs());
            }
        }
        d
    }
}

pub fn build_affine(spec: AffineSpec) -> Result<Matrix3, AugmentError> {
    let m = match spec {
        AffineSpec::Rotation { theta } => {
            let (s, c) = theta.sin_cos();
            [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
        }
        AffineSpec::Shift { dx, dy } => [[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]],
        AffineSpec::Shear { lambda } => [[1.0, lambda, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        AffineSpec::Zoom { alpha, beta } => {
            if !(alpha > 0.0 && beta > 0.0) {
                return Err(AugmentError::NonPositiveScale { alpha, beta });
            }
            [[alpha, 0.0, 0.0], [0.0, beta, 0.0], [0.0, 0.0, 1.0]]
        }
    };
    Ok(Matrix3(m))
}

/// Matrix product `a * b`: applying the result equals applying `b`, then `a`.
pub fn compose(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a.0[r][k] * b.0[k][c]).sum();
        }
    }
    out[2] = [0.0, 0.0, 1.0];
    Matrix3(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FillMode {
    NearestNeighbor,
}

/// Inverse-mapping warp about the image center with round-and-clamp
/// nearest-neighbor sampling. Output dimensions equal input dimensions.
pub fn warp(img: &RasterImage, m: &Matrix3, fill: FillMode) -> Result<RasterImage, AugmentError> {
    let FillMode::NearestNeighbor = fill;
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let inv = m.in_pixels(w, h).inverse()?;
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let src_index: Vec<usize> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 - cx, (i / w) as f64 - cy);
            let (sx, sy) = inv.apply(x, y);
            let sx = (sx + cx).round().clamp(0.0, (w - 1) as f64) as usize;
            let sy = (sy + cy).round().clamp(0.0, (h - 1) as f64) as usize;
            sy * w + sx
        })
        .collect();
    Ok(img.gather(w, h, |i| Some(src_index[i / c] * c + i % c)))
}

/// Mirror across the vertical axis: `out(x, y) = in(width - 1 - x, y)`.
pub fn horizontal_flip(img: &RasterImage) -> RasterImage {
    let (w, c) = (img.width(), img.channels());
    img.gather(w, img.height(), |i| {
        let (p, ch) = (i / c, i % c);
        let (x, y) = (p % w, p / w);
        Some((y * w + (w - 1 - x)) * c + ch)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    pub rotation_deg_range: [f64; 2],
    pub shift_range: [f64; 2],
    pub shear_range: [f64; 2],
    pub zoom_scale_range: [f64; 2],
    /// Probability of a horizontal flip.
    pub horizontal_flip: f64,
    pub fill_mode: FillMode,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            rotation_deg_range: [-20.0, 20.0],
            shift_range: [-0.05, 0.05],
            shear_range: [0.0, 0.05],
            zoom_scale_range: [0.95, 1.05],
            horizontal_flip: 0.5,
            fill_mode: FillMode::NearestNeighbor,
            seed: 0,
        }
    }
}

impl AugmentationConfig {
    /// A config whose every draw is the identity.
    pub fn identity(seed: u64) -> Self {
        Self {
            rotation_deg_range: [0.0, 0.0],
            shift_range: [0.0, 0.0],
            shear_range: [0.0, 0.0],
            zoom_scale_range: [1.0, 1.0],
            horizontal_flip: 0.0,
            fill_mode: FillMode::NearestNeighbor,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        let ranges = [
            ("rotation_deg_range", self.rotation_deg_range),
            ("shift_range", self.shift_range),
            ("shear_range", self.shear_range),
            ("zoom_scale_range", self.zoom_scale_range),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(AugmentError::InvalidConfig(format!("{name} must be an ordered finite pair")));
            }
        }
        if self.zoom_scale_range[0] <= 0.0 {
            return Err(AugmentError::InvalidConfig("zoom scales must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.horizontal_flip) {
            return Err(AugmentError::InvalidConfig("flip probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    let u: f64 = rng.gen();
    if hi > lo {
        lo + (hi - lo) * u
    } else {
        lo
    }
}

/// Draw number `draw_index` of the stream seeded by `cfg.seed`.
///
/// Returns `zoom * shear * shift * rotation` and whether to flip.
pub fn sample_augmentation(cfg: &AugmentationConfig, draw_index: u64) -> (Matrix3, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(draw_index);
    let theta = uniform(&mut rng, cfg.rotation_deg_range).to_radians();
    let dx = uniform(&mut rng, cfg.shift_range);
    let dy = uniform(&mut rng, cfg.shift_range);
    let lambda = uniform(&mut rng, cfg.shear_range);
    let alpha = uniform(&mut rng, cfg.zoom_scale_range);
    let beta = uniform(&mut rng, cfg.zoom_scale_range);
    let flip = rng.gen::<f64>() < cfg.horizontal_flip;

    let rot = build_affine(AffineSpec::Rotation { theta }).expect("rotation is total");
    let shift = build_affine(AffineSpec::Shift { dx, dy }).expect("shift is total");
    let shear = build_affine(AffineSpec::Shear { lambda }).expect("shear is total");
    let zoom = build_affine(AffineSpec::Zoom { alpha, beta }).unwrap_or(Matrix3::IDENTITY);
    let m = compose(&zoom, &compose(&shear, &compose(&shift, &rot)));
    (m, flip)
}

/// Applies a sampled augmentation (flip first, then the warp).
pub fn augment_image(img: &RasterImage, cfg: &AugmentationConfig, draw_index: u64) -> Result<RasterImage, AugmentError> {
    let (m, flip) = sample_augmentation(cfg, draw_index);
    let base = if flip { horizontal_flip(img) } else { img.clone() };
    warp(&base, &m, cfg.fill_mode)
}
