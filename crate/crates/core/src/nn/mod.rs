//! Dense NHWC tensors and the layer kernels needed by the two network graphs.
//!
//! Every operation is a pair of free functions: a forward pass and a backward
//! pass that consumes whatever the forward pass cached. Activations and
//! losses are evaluated in f32 with a fixed accumulation order so repeated
//! runs are bit-identical.

mod activation;
mod adam;
mod conv;
mod dense;
mod dropout;
mod gradcheck;
mod init;
mod loss;
mod pool;
mod rng;
mod tensor;

pub use activation::{activation, activation_backward, Activation};
pub use adam::{adam_step, AdamConfig, LayerParams};
pub use conv::{conv2d, conv2d_backward, ConvGrads, Padding};
pub use dense::{dense, dense_backward, DenseGrads};
pub use dropout::{dropout, dropout_backward, DropoutMode};
pub use gradcheck::{grad_check, relative_error};
pub use init::{glorot_uniform, he_uniform};
pub use loss::{bce_grad_at_logits, loss_bce, loss_cce, BCE_CLAMP};
pub use pool::{concat_channels, maxpool2d, maxpool2d_backward, split_channels, upsample_backward, upsample_nearest_2x};
pub use rng::RngStream;
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("spatial dimensions differ: {a:?} vs {b:?}")]
    SpatialMismatch { a: Vec<usize>, b: Vec<usize> },
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidRate(f32),
    #[error("probability row {row} sums to {sum}")]
    NotNormalized { row: usize, sum: f32 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("kernel dimensions must be odd, got {0}x{1}")]
    EvenKernel(usize, usize),
}

pub type Result<T> = std::result::Result<T, NnError>;
