use serde::{Deserialize, Serialize};

use super::{
    distance_transform, extract_rois, find_markers, gradient_magnitude, markers_from_mask, watershed_flood,
    BinaryMask, FloodOptions, FloodResult, LabelMatrix, MarkerParams, Roi, ScalarField, WatershedError,
};
use crate::imaging::{to_grayscale, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WatershedConfig {
    pub markers: MarkerParams,
    /// ROIs must cover more than this many pixels.
    pub min_area: usize,
    pub flood: FloodOptions,
}

impl Default for WatershedConfig {
    fn default() -> Self {
        Self {
            markers: MarkerParams::default(),
            min_area: 200,
            flood: FloodOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub markers: LabelMatrix,
    pub flood: FloodResult,
    pub rois: Vec<Roi>,
}

/// Full watershed on an image: markers, Sobel gradient of the grayscale, flood, ROIs.
pub fn segment_watershed(img: &RasterImage, cfg: &WatershedConfig) -> Result<Segmentation, WatershedError> {
    let markers = find_markers(img, &cfg.markers)?;
    let gray = to_grayscale(&img.to_byte());
    let grad = gradient_magnitude(&gray)?;
    let flood = watershed_flood(&grad, &markers, &cfg.flood)?;
    let rois = extract_rois(&flood.labels, img, cfg.min_area)?;
    Ok(Segmentation { markers, flood, rois })
}

/// Splits a foreground mask (e.g. a network's segmentation) into cells by
/// flooding the inverted distance field. Pixels outside the mask stay background.
pub fn segment_mask(mask: &BinaryMask, original: &RasterImage, cfg: &WatershedConfig) -> Result<Segmentation, WatershedError> {
    if mask.width != original.width() || mask.height != original.height() {
        return Err(WatershedError::DimensionMismatch("mask and image differ in size".into()));
    }
    let markers = markers_from_mask(mask, &cfg.markers)?;
    let dist = distance_transform(mask);
    let peak = dist.max();
    let relief = ScalarField::new(mask.width, mask.height, dist.values.iter().map(|d| peak - d).collect());
    let mut flood = watershed_flood(&relief, &markers, &cfg.flood)?;
    for (l, &inside) in flood.labels.labels.iter_mut().zip(&mask.bits) {
        if !inside {
            *l = LabelMatrix::BACKGROUND;
        }
    }
    let rois = extract_rois(&flood.labels, original, cfg.min_area)?;
    Ok(Segmentation { markers, flood, rois })
}
