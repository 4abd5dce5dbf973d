//! Raster images and the preprocessing operations applied to them.

mod clahe;
mod histogram;
mod io;
mod raster;
mod resize;

pub use clahe::{clahe, clipped_tile_histograms, ClaheParams};
pub use histogram::{channel_histograms, Histogram};
pub use io::{decode_image, encode_image};
pub use raster::{Depth, PixelData, RasterImage};
pub use resize::{rescale, resize_bilinear, to_grayscale, unit_to_byte, RescaleMode};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("target dimensions must be at least 1x1 (got {width}x{height})")]
    EmptyTarget { width: usize, height: usize },
    #[error("image {width}x{height} is smaller than the {tiles_x}x{tiles_y} tile grid")]
    ImageTooSmall {
        width: usize,
        height: usize,
        tiles_x: usize,
        tiles_y: usize,
    },
    #[error("invalid image layout: {0}")]
    InvalidLayout(String),
    #[error("operation requires {expected:?} depth")]
    WrongDepth { expected: Depth },
    #[error("operation requires {expected} channel(s), image has {actual}")]
    WrongChannels { expected: usize, actual: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
