use super::raster::quantize;
use super::{Depth, ImageError, PixelData, RasterImage};

/// Source coordinate and blend weight for one output coordinate along an axis.
///
/// Pixel centers are aligned (`src = (dst + 0.5) * in / out - 0.5`) and the
/// result is clamped to the valid index range, so edges replicate.
#[inline]
fn source_taps(dst: usize, len_in: usize, len_out: usize) -> (usize, usize, f64) {
    let scale = len_in as f64 / len_out as f64;
    let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len_in - 1) as f64);
    let lo = src.floor() as usize;
    let hi = (lo + 1).min(len_in - 1);
    (lo, hi, src - lo as f64)
}

/// Bilinear resize; each channel is interpolated independently.
pub fn resize_bilinear(img: &RasterImage, out_w: usize, out_h: usize) -> Result<RasterImage, ImageError> {
    if out_w == 0 || out_h == 0 {
        return Err(ImageError::EmptyTarget {
            width: out_w,
            height: out_h,
        });
    }
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let xs: Vec<_> = (0..out_w).map(|x| source_taps(x, w, out_w)).collect();
    let ys: Vec<_> = (0..out_h).map(|y| source_taps(y, h, out_h)).collect();

    let mut out = Vec::with_capacity(out_w * out_h * c);
    for &(y0, y1, ay) in &ys {
        for &(x0, x1, ax) in &xs {
            for ch in 0..c {
                let p00 = img.sample(x0, y0, ch) as f64;
                let p10 = img.sample(x1, y0, ch) as f64;
                let p01 = img.sample(x0, y1, ch) as f64;
                let p11 = img.sample(x1, y1, ch) as f64;
                let top = (1.0 - ax) * p00 + ax * p10;
                let bottom = (1.0 - ax) * p01 + ax * p11;
                out.push((1.0 - ay) * top + ay * bottom);
            }
        }
    }
    let data = match img.depth() {
        Depth::Byte => PixelData::Byte(out.into_iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()),
        Depth::UnitFloat => PixelData::UnitFloat(out.into_iter().map(|v| (v as f32).clamp(0.0, 1.0)).collect()),
    };
    Ok(RasterImage::with_data(out_w, out_h, c, data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleMode {
    /// `v / 255`, Byte input only.
    ByChannelMax255,
    /// `(v - min) / (max - min)` over the whole image; a constant image maps to zeros.
    MinMax,
}

pub fn rescale(img: &RasterImage, mode: RescaleMode) -> Result<RasterImage, ImageError> {
    let values: Vec<f32> = match mode {
        RescaleMode::ByChannelMax255 => {
            let bytes = img.as_bytes().ok_or(ImageError::WrongDepth { expected: Depth::Byte })?;
            bytes.iter().map(|&b| b as f32 / 255.0).collect()
        }
        RescaleMode::MinMax => {
            let raw: Vec<f64> = match img.data() {
                PixelData::Byte(v) => v.iter().map(|&b| b as f64).collect(),
                PixelData::UnitFloat(v) => v.iter().map(|&f| f as f64).collect(),
            };
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                raw.iter().map(|&v| ((v - lo) / (hi - lo)) as f32).collect()
            } else {
                vec![0.0; raw.len()]
            }
        }
    };
    RasterImage::from_unit(img.width(), img.height(), img.channels(), values)
}

/// Luminance `0.299 R + 0.587 G + 0.114 B`. Single-channel input is returned unchanged.
pub fn to_grayscale(img: &RasterImage) -> RasterImage {
    if img.channels() == 1 {
        return img.clone();
    }
    let luma = |r: f64, g: f64, b: f64| 0.299 * r + 0.587 * g + 0.114 * b;
    let data = match img.data() {
        PixelData::Byte(v) => PixelData::Byte(
            v.chunks_exact(3)
                .map(|p| luma(p[0] as f64, p[1] as f64, p[2] as f64).round().clamp(0.0, 255.0) as u8)
                .collect(),
        ),
        PixelData::UnitFloat(v) => PixelData::UnitFloat(
            v.chunks_exact(3)
                .map(|p| (luma(p[0] as f64, p[1] as f64, p[2] as f64) as f32).clamp(0.0, 1.0))
                .collect(),
        ),
    };
    RasterImage::with_data(img.width(), img.height(), 1, data)
}

/// Re-quantize a rescaled image back to bytes (inverse of `ByChannelMax255`).
pub fn unit_to_byte(img: &RasterImage) -> RasterImage {
    match img.data() {
        PixelData::UnitFloat(v) => RasterImage::with_data(
            img.width(),
            img.height(),
            img.channels(),
            PixelData::Byte(v.iter().map(|&x| quantize(x)).collect()),
        ),
        PixelData::Byte(_) => img.clone(),
    }
}
