use super::{BinaryMask, WatershedError};
use crate::imaging::RasterImage;

/// Between-class variance `w0 * w1 * (mu0 - mu1)^2` for the split `<= t` / `> t`.
pub(crate) fn between_class_variance(n0: u64, sum0: u64, n: u64, sum: u64) -> f64 {
    let n1 = n - n0;
    if n0 == 0 || n1 == 0 {
        return 0.0;
    }
    let (w0, w1) = (n0 as f64 / n as f64, n1 as f64 / n as f64);
    let mu0 = sum0 as f64 / n0 as f64;
    let mu1 = (sum - sum0) as f64 / n1 as f64;
    w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
}

/// Otsu's threshold over the 256-bin histogram; the mask marks `pixel > threshold`.
///
/// Among equally good thresholds the lowest wins. A constant image has no
/// split and yields [`WatershedError::ConstantImage`].
pub fn otsu_threshold(gray: &RasterImage) -> Result<(u8, BinaryMask), WatershedError> {
    if gray.channels() != 1 {
        return Err(WatershedError::MultiChannelInput(gray.channels()));
    }
    let px = gray.as_bytes().ok_or(WatershedError::NotByteDepth)?;
    let mut hist = [0u64; 256];
    for &v in px {
        hist[v as usize] += 1;
    }
    let n = px.len() as u64;
    let sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(WatershedError::ConstantImage { value: px[0] });
    }

    let (mut best_t, mut best) = (0u8, -1.0);
    let (mut n0, mut sum0) = (0u64, 0u64);
    for t in 0..255usize {
        n0 += hist[t];
        sum0 += t as u64 * hist[t];
        let var = between_class_variance(n0, sum0, n, sum);
        if var > best {
            best = var;
            best_t = t as u8;
        }
    }
    let mask = BinaryMask::new(gray.width(), gray.height(), px.iter().map(|&v| v > best_t).collect());
    Ok((best_t, mask))
}
