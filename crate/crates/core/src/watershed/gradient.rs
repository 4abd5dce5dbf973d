use super::{ScalarField, WatershedError};
use crate::imaging::RasterImage;

/// Sobel gradient magnitude `sqrt(gx^2 + gy^2)` of a single-channel image, in
/// the image's own value scale, with replicated borders.
pub fn gradient_magnitude(img: &RasterImage) -> Result<ScalarField, WatershedError> {
    if img.channels() != 1 {
        return Err(WatershedError::MultiChannelInput(img.channels()));
    }
    let (w, h) = (img.width(), img.height());
    let values = (0..w * h).map(|i| img.sample(i % w, i / w, 0) as f64).collect();
    Ok(gradient_magnitude_field(&ScalarField::new(w, h, values)))
}

pub fn gradient_magnitude_field(field: &ScalarField) -> ScalarField {
    let (w, h) = (field.width, field.height);
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        field.values[y * w + x]
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    ScalarField::new(w, h, out)
}
