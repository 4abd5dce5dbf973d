use serde::{Deserialize, Serialize};

use super::{ratio, EvalError};
use crate::watershed::BinaryMask;

/// Foreground-positive pixel tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PixelCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl std::ops::Add for PixelCounts {
    type Output = PixelCounts;
    fn add(self, o: PixelCounts) -> PixelCounts {
        PixelCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub iou: f64,
    pub dice: f64,
    pub counts: PixelCounts,
    pub zero_division: bool,
}

impl PixelMetrics {
    /// Metrics of a tally. When neither mask has foreground, IoU and Dice are 1.
    pub fn from_counts(c: PixelCounts) -> Self {
        let mut flag = false;
        let union = c.tp + c.fp + c.fn_;
        let (iou, dice) = if union == 0 {
            (1.0, 1.0)
        } else {
            (c.tp as f64 / union as f64, 2.0 * c.tp as f64 / (2 * c.tp + c.fp + c.fn_) as f64)
        };
        Self {
            accuracy: ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn_, &mut flag),
            precision: ratio(c.tp, c.tp + c.fp, &mut flag),
            sensitivity: ratio(c.tp, c.tp + c.fn_, &mut flag),
            iou,
            dice,
            counts: c,
            zero_division: flag,
        }
    }
}

pub fn pixel_metrics(pred: &BinaryMask, gt: &BinaryMask) -> Result<PixelMetrics, EvalError> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(EvalError::DimensionMismatch((pred.width, pred.height), (gt.width, gt.height)));
    }
    let mut c = PixelCounts::default();
    for (&p, &g) in pred.bits.iter().zip(&gt.bits) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(PixelMetrics::from_counts(c))
}
