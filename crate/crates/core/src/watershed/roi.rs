use serde::{Deserialize, Serialize};

use super::{LabelMatrix, WatershedError};
use crate::imaging::RasterImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// One extracted cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Roi {
    pub label: i32,
    pub bbox: BBox,
    /// Pixel count of the region.
    pub area: usize,
    /// Bounding-box cutout of the original image with pixels outside the region zeroed.
    pub crop: RasterImage,
}

/// One ROI per object label whose area exceeds `min_area`, ordered by label.
pub fn extract_rois(labels: &LabelMatrix, original: &RasterImage, min_area: usize) -> Result<Vec<Roi>, WatershedError> {
    if labels.width != original.width() || labels.height != original.height() {
        return Err(WatershedError::DimensionMismatch(format!(
            "labels {}x{} vs image {}x{}",
            labels.width,
            labels.height,
            original.width(),
            original.height()
        )));
    }
    let objects = labels.object_labels();
    let mut stats: Vec<(usize, usize, usize, usize, usize)> = vec![(usize::MAX, usize::MAX, 0, 0, 0); objects.len()];
    for (i, &l) in labels.labels.iter().enumerate() {
        if l < 1 {
            continue;
        }
        let k = objects.binary_search(&l).expect("collected above");
        let (x, y) = (i % labels.width, i / labels.width);
        let s = &mut stats[k];
        s.0 = s.0.min(x);
        s.1 = s.1.min(y);
        s.2 = s.2.max(x);
        s.3 = s.3.max(y);
        s.4 += 1;
    }

    let c = original.channels();
    let mut rois = Vec::new();
    for (&label, &(x0, y0, x1, y1, area)) in objects.iter().zip(&stats) {
        if area <= min_area {
            continue;
        }
        let bbox = BBox {
            x: x0,
            y: y0,
            w: x1 - x0 + 1,
            h: y1 - y0 + 1,
        };
        let crop = original.gather(bbox.w, bbox.h, |i| {
            let (p, ch) = (i / c, i % c);
            let (sx, sy) = (bbox.x + p % bbox.w, bbox.y + p / bbox.w);
            (labels.get(sx, sy) == label).then(|| original.index(sx, sy, ch))
        });
        rois.push(Roi { label, bbox, area, crop });
    }
    Ok(rois)
}
