//! Classification and segmentation metrics, ROC analysis and fold planning.

mod aggregate;
mod confusion;
mod kfold;
mod pixel;
mod roc;

pub use aggregate::{aggregate_folds, render_fold_table};
pub use confusion::{confusion_matrix, metrics_from_confusion, ClassCounts, ClassMetrics, ConfusionMatrix, MetricSet};
pub use kfold::{kfold_split, FoldPlan};
pub use pixel::{pixel_metrics, PixelCounts, PixelMetrics};
pub use roc::{roc_auc, roc_curve, RocCurve, RocReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("class id {id} outside 0..{k}")]
    IdOutOfRange { id: usize, k: usize },
    #[error("confusion matrix has no samples")]
    EmptyMatrix,
    #[error("mask dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no folds to aggregate")]
    NoFolds,
}

/// `num / den`, or 0 with `flag` raised when the denominator is zero.
#[inline]
pub(crate) fn ratio(num: u64, den: u64, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[inline]
pub(crate) fn harmonic(p: f64, r: f64, flag: &mut bool) -> f64 {
    if p + r == 0.0 {
        *flag = true;
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
