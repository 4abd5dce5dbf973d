use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{neighbors4, LabelMatrix, ScalarField, WatershedError};

/// Flooding behavior when two object basins meet.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloodOptions {
    /// Basins meeting at level `L` merge when the shallower one is less than
    /// `merge_depth` deep there (`L - basin_minimum < merge_depth`). Zero
    /// disables merging. The background basin (label 0) never merges.
    pub merge_depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Representative label that survives (the smaller one).
    pub kept: i32,
    pub absorbed: i32,
    /// Gradient level at which the basins met.
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloodResult {
    /// Labels after merges are applied (merge representatives).
    pub labels: LabelMatrix,
    /// Labels as assigned by the flood, before merging.
    pub raw: LabelMatrix,
    /// Merges in the order they happened.
    pub merges: Vec<Merge>,
}

#[derive(Debug, PartialEq)]
struct Entry {
    level: f64,
    seq: u64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the lowest level first, then the earliest push.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .level
            .total_cmp(&self.level)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn find(parent: &mut [i32], mut l: i32) -> i32 {
    while parent[l as usize] != l {
        let up = parent[parent[l as usize] as usize];
        parent[l as usize] = up;
        l = up;
    }
    l
}

/// Priority-flood watershed from markers over a gradient field.
///
/// Marker pixels (label >= 0) seed the queue in raster order. Popping a pixel
/// labels each unprocessed 4-neighbor with the popped pixel's basin and pushes
/// it at its own gradient level; equal levels leave the queue in push order.
/// When a popped pixel touches a pixel of another object basin the pair is
/// considered for merging (see [`FloodOptions`]).
pub fn watershed_flood(
    grad: &ScalarField,
    markers: &LabelMatrix,
    opts: &FloodOptions,
) -> Result<FloodResult, WatershedError> {
    let (w, h) = (grad.width, grad.height);
    if markers.width != w || markers.height != h {
        return Err(WatershedError::DimensionMismatch(format!(
            "gradient {}x{} vs markers {}x{}",
            w, h, markers.width, markers.height
        )));
    }
    let max_label = markers.max_label();
    if max_label < 0 {
        return Err(WatershedError::NoMarkers);
    }

    let g = &grad.values;
    let mut raw = markers.labels.clone();
    let mut parent: Vec<i32> = (0..=max_label).collect();
    let mut basin_min = vec![f64::INFINITY; max_label as usize + 1];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for (i, &l) in raw.iter().enumerate() {
        if l >= 0 {
            basin_min[l as usize] = basin_min[l as usize].min(g[i]);
            heap.push(Entry {
                level: g[i],
                seq,
                index: i,
            });
            seq += 1;
        }
    }

    let mut merges = Vec::new();
    while let Some(Entry { index, .. }) = heap.pop() {
        let label = raw[index];
        for q in neighbors4(index, w, h) {
            let other = raw[q];
            if other == LabelMatrix::UNPROCESSED {
                raw[q] = label;
                heap.push(Entry {
                    level: g[q],
                    seq,
                    index: q,
                });
                seq += 1;
            } else if opts.merge_depth > 0.0 && other != label && other >= 1 && label >= 1 {
                let (ra, rb) = (find(&mut parent, label), find(&mut parent, other));
                if ra == rb {
                    continue;
                }
                let level = g[index].max(g[q]);
                let depth = (level - basin_min[ra as usize]).min(level - basin_min[rb as usize]);
                if depth < opts.merge_depth {
                    let (kept, absorbed) = (ra.min(rb), ra.max(rb));
                    parent[absorbed as usize] = kept;
                    basin_min[kept as usize] = basin_min[kept as usize].min(basin_min[absorbed as usize]);
                    merges.push(Merge { kept, absorbed, level });
                }
            }
        }
    }

    let unlabelled = raw.iter().filter(|&&l| l == LabelMatrix::UNPROCESSED).count();
    if unlabelled > 0 {
        return Err(WatershedError::IncompleteFlood { unlabelled });
    }
    let merged = raw.iter().map(|&l| if l >= 1 { find(&mut parent, l) } else { l }).collect();
    Ok(FloodResult {
        labels: LabelMatrix::new(w, h, merged),
        raw: LabelMatrix::new(w, h, raw),
        merges,
    })
}
