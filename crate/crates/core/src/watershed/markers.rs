use serde::{Deserialize, Serialize};

use super::{
    connected_components, distance_transform, morphology, otsu_threshold, BinaryMask, Connectivity, LabelMatrix,
    MorphOp, WatershedError,
};
use crate::imaging::{to_grayscale, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkerParams {
    /// Objects are darker than the background.
    pub invert: bool,
    /// Iterations of the 3x3 opening applied to the Otsu mask.
    pub open_iterations: usize,
    /// Seeds are pixels whose distance exceeds this fraction of the maximum distance.
    pub dist_threshold_frac: f64,
    /// Seed components smaller than this many pixels are dropped.
    pub min_marker_area: usize,
    /// Dilations of the opened mask; pixels outside it seed the background basin.
    pub bg_dilate_iterations: usize,
}

impl Default for MarkerParams {
    fn default() -> Self {
        Self {
            invert: true,
            open_iterations: 2,
            dist_threshold_frac: 0.7,
            min_marker_area: 10,
            bg_dilate_iterations: 3,
        }
    }
}

impl MarkerParams {
    pub fn validate(&self) -> Result<(), WatershedError> {
        if !(self.dist_threshold_frac > 0.0 && self.dist_threshold_frac < 1.0) {
            return Err(WatershedError::InvalidParams(format!(
                "dist_threshold_frac must lie in (0, 1), got {}",
                self.dist_threshold_frac
            )));
        }
        Ok(())
    }
}

/// Object and background markers for an image: grayscale, Otsu, then [`markers_from_mask`].
pub fn find_markers(img: &RasterImage, p: &MarkerParams) -> Result<LabelMatrix, WatershedError> {
    p.validate()?;
    let gray = to_grayscale(&img.to_byte());
    let mask = match otsu_threshold(&gray) {
        Ok((_, mask)) => mask,
        Err(WatershedError::ConstantImage { .. }) => return Err(WatershedError::NoMarkersFound),
        Err(e) => return Err(e),
    };
    let mask = if p.invert { mask.invert() } else { mask };
    markers_from_mask(&mask, p)
}

/// Opening, distance transform, fractional peak threshold and 8-connected
/// components give the object markers `1..=K`; label 0 marks pixels outside
/// the dilated mask; everything else is left unprocessed (`-1`).
pub fn markers_from_mask(mask: &BinaryMask, p: &MarkerParams) -> Result<LabelMatrix, WatershedError> {
    p.validate()?;
    let opened = morphology(mask, MorphOp::Open, p.open_iterations);
    if opened.count() == 0 {
        return Err(WatershedError::NoMarkersFound);
    }
    let dist = distance_transform(&opened);
    let cut = p.dist_threshold_frac * dist.max();
    let seeds = BinaryMask::new(mask.width, mask.height, dist.values.iter().map(|&d| d > cut).collect());
    let (components, n) = connected_components(&seeds, Connectivity::Eight);

    let mut area = vec![0usize; n + 1];
    for &l in &components.labels {
        area[l as usize] += 1;
    }
    let mut remap = vec![LabelMatrix::UNPROCESSED; n + 1];
    let mut next = 0;
    for l in 1..=n {
        if area[l] >= p.min_marker_area {
            next += 1;
            remap[l] = next;
        }
    }
    if next == 0 {
        return Err(WatershedError::NoMarkersFound);
    }

    let sure_bg = morphology(&opened, MorphOp::Dilate, p.bg_dilate_iterations);
    let labels = components
        .labels
        .iter()
        .zip(&sure_bg.bits)
        .map(|(&l, &near_object)| {
            if l > 0 {
                remap[l as usize]
            } else if !near_object {
                LabelMatrix::BACKGROUND
            } else {
                LabelMatrix::UNPROCESSED
            }
        })
        .collect();
    Ok(LabelMatrix::new(mask.width, mask.height, labels))
}
