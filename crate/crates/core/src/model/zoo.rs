use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{LayerKind, LayerSpec, ModelError, ModelGraph};
use crate::nn::{Activation, Padding};

/// Side length of the classifier's square RGB input.
pub const LWCNN_INPUT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropoutRates {
    /// After each pooled convolution block.
    pub conv: f32,
    /// After the hidden dense layer.
    pub dense: f32,
}

impl Default for DropoutRates {
    fn default() -> Self {
        Self { conv: 0.25, dense: 0.5 }
    }
}

/// Appends layers with `Type_k` names numbered per type (the input layer is just `InputLayer`).
#[derive(Default)]
struct Builder {
    layers: Vec<LayerSpec>,
    counters: HashMap<&'static str, usize>,
}

impl Builder {
    fn push(&mut self, kind: LayerKind) -> usize {
        let ty = kind.type_name();
        let k = self.counters.entry(ty).or_insert(0);
        *k += 1;
        let skip_source = match kind {
            LayerKind::Concatenate { skip } => Some(self.layers[skip].name.clone()),
            _ => None,
        };
        let name = match kind {
            LayerKind::Input => ty.to_string(),
            _ => format!("{ty}_{k}"),
        };
        self.layers.push(LayerSpec {
            name,
            kind,
            skip_source,
        });
        self.layers.len() - 1
    }

    fn conv(&mut self, filters: usize, padding: Padding) -> usize {
        self.push(LayerKind::Conv2D {
            filters,
            kernel: 3,
            padding,
            activation: Activation::Relu,
        })
    }
}

pub fn build_lwcnn(num_classes: usize) -> Result<ModelGraph, ModelError> {
    build_lwcnn_with(num_classes, DropoutRates::default())
}

/// Four valid-padded ReLU convolutions (32, 64, 128, 256 filters) each
/// followed by 2x2 pooling, dropout after the last three blocks, then
/// Dense(256) with dropout and a softmax head, on a 64x64x3 input.
pub fn build_lwcnn_with(num_classes: usize, rates: DropoutRates) -> Result<ModelGraph, ModelError> {
    if num_classes < 2 {
        return Err(ModelError::InvalidConfig(format!("need at least 2 classes, got {num_classes}")));
    }
    let mut b = Builder::default();
    for (block, filters) in [32, 64, 128, 256].into_iter().enumerate() {
        b.conv(filters, Padding::Valid);
        b.push(LayerKind::MaxPool2D);
        if block > 0 {
            b.push(LayerKind::Dropout { rate: rates.conv });
        }
    }
    b.push(LayerKind::Flatten);
    b.push(LayerKind::Dense {
        units: 256,
        activation: Activation::Relu,
    });
    b.push(LayerKind::Dropout { rate: rates.dense });
    b.push(LayerKind::Dense {
        units: num_classes,
        activation: Activation::Softmax,
    });
    ModelGraph::new([LWCNN_INPUT, LWCNN_INPUT, 3], b.layers, 0)
}

pub fn build_unet(width_mult: f64) -> Result<ModelGraph, ModelError> {
    build_unet_sized(width_mult, 256)
}

/// Encoder of four double-conv blocks (64..512 filters) with pooling, a
/// 1024-filter middle block, and a decoder that upsamples, concatenates the
/// second conv of the matching encoder block, and applies two convs; a 1x1
/// sigmoid conv produces the mask. Channel counts scale by `width_mult`.
pub fn build_unet_sized(width_mult: f64, input_size: usize) -> Result<ModelGraph, ModelError> {
    if ![1.0, 0.5, 0.25, 0.125].contains(&width_mult) {
        return Err(ModelError::InvalidWidthMult(width_mult));
    }
    if input_size == 0 || input_size % 16 != 0 {
        return Err(ModelError::InvalidConfig(format!("input size {input_size} must be a positive multiple of 16")));
    }
    let ch = |c: usize| (c as f64 * width_mult) as usize;
    let mut b = Builder::default();
    b.push(LayerKind::Input);
    let mut skips = Vec::new();
    for filters in [64, 128, 256, 512] {
        b.conv(ch(filters), Padding::Same);
        skips.push(b.conv(ch(filters), Padding::Same));
        b.push(LayerKind::MaxPool2D);
    }
    b.conv(ch(1024), Padding::Same);
    b.conv(ch(1024), Padding::Same);
    for filters in [512, 256, 128, 64] {
        b.push(LayerKind::UpSample2D);
        let skip = skips.pop().expect("one skip per decoder block");
        b.push(LayerKind::Concatenate { skip });
        b.conv(ch(filters), Padding::Same);
        b.conv(ch(filters), Padding::Same);
    }
    b.push(LayerKind::Conv2D {
        filters: 1,
        kernel: 1,
        padding: Padding::Same,
        activation: Activation::Sigmoid,
    });
    ModelGraph::new([input_size, input_size, 3], b.layers, 0)
}
