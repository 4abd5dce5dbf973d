//! Marker-based watershed instance segmentation and ROI extraction.
//!
//! The pipeline for one image is: grayscale, Otsu threshold, morphological
//! opening, Euclidean distance transform, a fractional threshold on the
//! distance peaks, connected components for object markers, and a dilated
//! complement of the mask as the background marker. Basins are then flooded
//! over the Sobel gradient magnitude in ascending priority order and each
//! surviving object basin becomes a [`Roi`].

mod components;
mod distance;
mod flood;
mod gradient;
mod markers;
mod morphology;
mod otsu;
mod pipeline;
mod roi;

pub use components::{connected_components, Connectivity};
pub use distance::distance_transform;
pub use flood::{watershed_flood, FloodOptions, FloodResult, Merge};
pub use gradient::{gradient_magnitude, gradient_magnitude_field};
pub use markers::{find_markers, markers_from_mask, MarkerParams};
pub use morphology::{morphology, MorphOp};
pub use otsu::otsu_threshold;
pub use pipeline::{segment_mask, segment_watershed, Segmentation, WatershedConfig};
pub use roi::{extract_rois, BBox, Roi};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WatershedError {
    #[error("expected a single-channel image, got {0} channels")]
    MultiChannelInput(usize),
    #[error("operation requires an 8-bit image")]
    NotByteDepth,
    #[error("image is constant at value {value}")]
    ConstantImage { value: u8 },
    #[error("no markers found")]
    NoMarkersFound,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("marker matrix contains no labelled pixels")]
    NoMarkers,
    #[error("{unlabelled} pixel(s) were never reached by any basin")]
    IncompleteFlood { unlabelled: usize },
    #[error("invalid marker parameters: {0}")]
    InvalidParams(String),
}

/// Real-valued per-pixel field, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "field length must equal width * height");
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { width, height, values }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0.0; width * height])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask length must equal width * height");
        Self { width, height, bits }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let bits = (0..width * height).map(|i| f(i % width, i / width)).collect();
        Self { width, height, bits }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn invert(&self) -> BinaryMask {
        BinaryMask::new(self.width, self.height, self.bits.iter().map(|b| !b).collect())
    }
}

/// Per-pixel basin labels: `-1` unprocessed, `0` background, `>= 1` objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<i32>,
}

impl LabelMatrix {
    pub const UNPROCESSED: i32 = -1;
    pub const BACKGROUND: i32 = 0;

    pub fn new(width: usize, height: usize, labels: Vec<i32>) -> Self {
        assert_eq!(labels.len(), width * height, "label length must equal width * height");
        Self { width, height, labels }
    }

    pub fn unprocessed(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![Self::UNPROCESSED; width * height])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.labels[y * self.width + x]
    }

    pub fn max_label(&self) -> i32 {
        self.labels.iter().copied().max().unwrap_or(Self::UNPROCESSED)
    }

    /// Distinct object labels (>= 1), ascending.
    pub fn object_labels(&self) -> Vec<i32> {
        let mut seen: Vec<i32> = self.labels.iter().copied().filter(|&l| l >= 1).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    /// Renumbers object labels to `1..=K` preserving their order; `-1` and `0` are kept.
    pub fn compact(&self) -> LabelMatrix {
        let objects = self.object_labels();
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if l >= 1 {
                    objects.binary_search(&l).expect("label present") as i32 + 1
                } else {
                    l
                }
            })
            .collect();
        LabelMatrix::new(self.width, self.height, labels)
    }
}

/// 4-neighborhood in a fixed order: up, left, right, down.
#[inline]
pub(crate) fn neighbors4(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % w, i / w);
    [
        (y > 0).then(|| i - w),
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}
