//! The two network graphs, their training loop, inference helpers and the
//! binary weight-file format.

mod graph;
mod predict;
mod train;
mod weights;
mod zoo;

pub use graph::{ForwardCache, GradAt, LayerKind, LayerSpec, Mode, ModelGraph, TableRow};
pub use predict::{image_tensor, predict, predict_batch, segment, segment_probabilities, Prediction};
pub use train::{train, train_with, Dataset, EpochMetrics, EpochRecord, History, LossKind, Targets, TrainConfig};
pub use weights::{load_weights, read_weights, save_weights, write_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use zoo::{build_lwcnn, build_lwcnn_with, build_unet, build_unet_sized, DropoutRates, LWCNN_INPUT};

use crate::augment::AugmentError;
use crate::imaging::ImageError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error("width_mult must be one of 1, 1/2, 1/4, 1/8; got {0}")]
    InvalidWidthMult(f64),
    #[error("invalid model or training configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label {label} outside the model's {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("loss became non-finite in epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("input shape error: {0}")]
    ShapeError(String),
    #[error("malformed weights file: {0}")]
    FormatError(String),
    #[error("weights do not fit this model: {0}")]
    ArchitectureMismatch(String),
    #[error("weights checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}
