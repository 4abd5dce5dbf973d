//! Microscopy blood-smear analysis toolkit.
//!
//! The crate is organized the way images flow through the pipeline:
//!
//! * [`imaging`]: decoding, resizing, rescaling, grayscale, histograms and CLAHE.
//! * [`augment`]: affine transforms, flips and the randomized augmentation sampler.
//! * [`watershed`]: marker construction, priority-flood watershed and ROI extraction.
//! * [`nn`]: a small dense-tensor neural network kernel with forward and backward passes.
//! * [`model`]: the U-Net and the lightweight classifier, training, prediction and weight files.
//! * [`eval`]: confusion matrices, classification and pixel metrics, ROC/AUC and k-fold plans.
//! * [`synth`]: procedural fixtures used by tests, benchmarks and the acceptance suite.

pub mod augment;
pub mod eval;
pub mod imaging;
pub mod model;
pub mod nn;
pub mod synth;
pub mod watershed;

pub use augment::{AffineSpec, AugmentationConfig, Matrix3};
pub use eval::{ClassMetrics, ConfusionMatrix, FoldPlan, PixelMetrics, RocCurve};
pub use imaging::{ClaheParams, Depth, Histogram, RasterImage};
pub use model::{History, ModelGraph, TrainConfig};
pub use nn::Tensor;
pub use watershed::{BinaryMask, LabelMatrix, MarkerParams, Roi, ScalarField};
