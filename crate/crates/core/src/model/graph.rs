use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::nn::{
    activation, activation_backward, concat_channels, conv2d, conv2d_backward, dense, dense_backward, dropout,
    dropout_backward, glorot_uniform, he_uniform, maxpool2d, maxpool2d_backward, split_channels, upsample_backward,
    upsample_nearest_2x, Activation, DropoutMode, LayerParams, Padding, RngStream, Tensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayerKind {
    Input,
    Conv2D {
        filters: usize,
        kernel: usize,
        padding: Padding,
        activation: Activation,
    },
    MaxPool2D,
    UpSample2D,
    /// Previous output first, then the output of layer `skip`.
    Concatenate {
        skip: usize,
    },
    Dropout {
        rate: f32,
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
    },
}

impl LayerKind {
    /// Layer type as printed in architecture summaries.
    pub fn type_name(&self) -> &'static str {
        match self {
            LayerKind::Input => "InputLayer",
            LayerKind::Conv2D { .. } => "Conv2D",
            LayerKind::MaxPool2D => "MaxPooling2D",
            LayerKind::UpSample2D => "UpSampling2D",
            LayerKind::Concatenate { .. } => "Concatenate",
            LayerKind::Dropout { .. } => "Dropout",
            LayerKind::Flatten => "Flatten",
            LayerKind::Dense { .. } => "Dense",
        }
    }

    fn activation(&self) -> Option<Activation> {
        match *self {
            LayerKind::Conv2D { activation, .. } | LayerKind::Dense { activation, .. } => Some(activation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    /// Name of the layer a `Concatenate` reads its second operand from.
    pub skip_source: Option<String>,
}

/// One line of an architecture summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub name: String,
    pub type_name: &'static str,
    /// Output shape without the batch axis.
    pub shape: Vec<usize>,
    pub params: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Where the gradient handed to [`ModelGraph::backward`] is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradAt {
    /// With respect to the final layer's output.
    Output,
    /// With respect to the final layer's pre-activation (fused loss gradients).
    Logits,
}

#[derive(Debug, Clone)]
enum Aux {
    None,
    Pool(Vec<usize>),
    Mask(Option<Vec<f32>>),
}

/// Everything one forward pass keeps for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Tensor,
    outputs: Vec<Tensor>,
    aux: Vec<Aux>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor {
        self.outputs.last().unwrap_or(&self.input)
    }

    pub fn layer_output(&self, i: usize) -> &Tensor {
        &self.outputs[i]
    }
}

/// Ordered layer list with per-layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    input_shape: [usize; 3],
    layers: Vec<LayerSpec>,
    shapes: Vec<Vec<usize>>,
    params: Vec<Option<LayerParams>>,
}

impl ModelGraph {
    /// Validates the layer list, infers every output shape and initializes
    /// parameters from `seed`.
    pub fn new(input_shape: [usize; 3], layers: Vec<LayerSpec>, seed: u64) -> Result<Self, ModelError> {
        let mut names = HashSet::new();
        let mut shapes: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
        for (i, layer) in layers.iter().enumerate() {
            if !names.insert(layer.name.as_str()) {
                return Err(ModelError::InvalidConfig(format!("duplicate layer name {}", layer.name)));
            }
            let prev = if i == 0 { input_shape.to_vec() } else { shapes[i - 1].clone() };
            let bad = |msg: String| ModelError::InvalidConfig(format!("{}: {msg}", layer.name));
            let shape = match layer.kind {
                LayerKind::Input => prev,
                LayerKind::Conv2D {
                    filters,
                    kernel,
                    padding,
                    ..
                } => {
                    let [h, w, _] = spatial(&prev).ok_or_else(|| bad(format!("needs an image input, got {prev:?}")))?;
                    if kernel % 2 == 0 {
                        return Err(bad("kernel must be odd".into()));
                    }
                    match padding {
                        Padding::Same => vec![h, w, filters],
                        Padding::Valid if h >= kernel && w >= kernel => vec![h - kernel + 1, w - kernel + 1, filters],
                        Padding::Valid => return Err(bad("input smaller than kernel".into())),
                    }
                }
                LayerKind::MaxPool2D => {
                    let [h, w, c] = spatial(&prev).ok_or_else(|| bad("needs an image input".into()))?;
                    vec![h / 2, w / 2, c]
                }
                LayerKind::UpSample2D => {
                    let [h, w, c] = spatial(&prev).ok_or_else(|| bad("needs an image input".into()))?;
                    vec![2 * h, 2 * w, c]
                }
                LayerKind::Concatenate { skip } => {
                    if skip >= i {
                        return Err(bad("skip source must precede the layer".into()));
                    }
                    if layer.skip_source.as_deref() != Some(layers[skip].name.as_str()) {
                        return Err(bad("skip_source does not name the skip layer".into()));
                    }
                    let (a, b) = (&prev, &shapes[skip]);
                    if a.len() != 3 || b.len() != 3 || a[..2] != b[..2] {
                        return Err(bad(format!("cannot concatenate {a:?} with {b:?}")));
                    }
                    vec![a[0], a[1], a[2] + b[2]]
                }
                LayerKind::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(bad(format!("dropout rate {rate}")));
                    }
                    prev
                }
                LayerKind::Flatten => vec![prev.iter().product()],
                LayerKind::Dense { units, .. } => {
                    if prev.len() != 1 {
                        return Err(bad(format!("needs a flat input, got {prev:?}")));
                    }
                    vec![units]
                }
            };
            shapes.push(shape);
        }
        let mut g = Self {
            input_shape,
            layers,
            shapes,
            params: Vec::new(),
        };
        g.reinitialize(seed);
        Ok(g)
    }

    /// Fresh parameters: He-uniform for ReLU layers, Glorot-uniform otherwise, zero biases.
    pub fn reinitialize(&mut self, seed: u64) {
        self.params = (0..self.layers.len())
            .map(|i| {
                let (wshape, fan_in, fan_out) = self.weight_shape(i)?;
                let mut rng = RngStream::new(seed, i as u64);
                let w = match self.layers[i].kind.activation() {
                    Some(Activation::Relu) => he_uniform(&wshape, fan_in, &mut rng),
                    _ => glorot_uniform(&wshape, fan_in, fan_out, &mut rng),
                };
                let units = *wshape.last().expect("non-empty weight shape");
                Some(LayerParams::new(w, Tensor::zeros(&[units])))
            })
            .collect();
    }

    /// Weight shape with fan-in and fan-out, for parametric layers.
    fn weight_shape(&self, i: usize) -> Option<(Vec<usize>, usize, usize)> {
        let input = self.input_shape_of(i);
        match self.layers[i].kind {
            LayerKind::Conv2D { filters, kernel, .. } => {
                let cin = input[2];
                Some((vec![kernel, kernel, cin, filters], kernel * kernel * cin, kernel * kernel * filters))
            }
            LayerKind::Dense { units, .. } => Some((vec![input[0], units], input[0], units)),
            _ => None,
        }
    }

    fn input_shape_of(&self, i: usize) -> Vec<usize> {
        if i == 0 {
            self.input_shape.to_vec()
        } else {
            self.shapes[i - 1].clone()
        }
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().map_or(&self.input_shape[..], |s| s.as_slice())
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layer_shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn params(&self) -> &[Option<LayerParams>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Option<LayerParams>] {
        &mut self.params
    }

    /// Total weight and bias elements over parametric layers.
    pub fn count_parameters(&self) -> usize {
        self.params.iter().flatten().map(LayerParams::count).sum()
    }

    pub fn summary(&self) -> Vec<TableRow> {
        self.layers
            .iter()
            .zip(&self.shapes)
            .zip(&self.params)
            .map(|((l, s), p)| TableRow {
                name: l.name.clone(),
                type_name: l.kind.type_name(),
                shape: s.clone(),
                params: p.as_ref().map_or(0, LayerParams::count),
            })
            .collect()
    }

    /// Runs the graph on `x: [N, H, W, C]`. In `Train` mode dropout masks are
    /// drawn from `rng`, forked per layer.
    pub fn forward(&self, x: &Tensor, mode: Mode, rng: &RngStream) -> Result<ForwardCache, ModelError> {
        let (_, h, w, c) = x.dims4()?;
        if [h, w, c] != self.input_shape {
            return Err(ModelError::ShapeError(format!(
                "input {:?} does not match model input {:?}",
                &x.shape()[1..],
                self.input_shape
            )));
        }
        let mut outputs: Vec<Tensor> = Vec::with_capacity(self.layers.len());
        let mut aux = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { &outputs[i - 1] };
            let (out, a) = match layer.kind {
                LayerKind::Input => (input.clone(), Aux::None),
                LayerKind::Conv2D {
                    padding, activation: act, ..
                } => {
                    let p = self.params[i].as_ref().expect("conv layers carry parameters");
                    (activation(&conv2d(input, &p.weights, &p.bias, padding)?, act), Aux::None)
                }
                LayerKind::MaxPool2D => {
                    let (y, arg) = maxpool2d(input)?;
                    (y, Aux::Pool(arg))
                }
                LayerKind::UpSample2D => (upsample_nearest_2x(input)?, Aux::None),
                LayerKind::Concatenate { skip } => (concat_channels(input, &outputs[skip])?, Aux::None),
                LayerKind::Dropout { rate } => {
                    let m = match mode {
                        Mode::Train => DropoutMode::Train,
                        Mode::Infer => DropoutMode::Infer,
                    };
                    let (y, mask) = dropout(input, rate, m, &rng.fork(i as u64))?;
                    (y, Aux::Mask(mask))
                }
                LayerKind::Flatten => {
                    let n = input.shape()[0];
                    (input.clone().reshape(&[n, input.len() / n.max(1)])?, Aux::None)
                }
                LayerKind::Dense { activation: act, .. } => {
                    let p = self.params[i].as_ref().expect("dense layers carry parameters");
                    (activation(&dense(input, &p.weights, &p.bias)?, act), Aux::None)
                }
            };
            outputs.push(out);
            aux.push(a);
        }
        Ok(ForwardCache {
            input: x.clone(),
            outputs,
            aux,
        })
    }

    /// Back-propagates `grad` through the cached pass and adds parameter
    /// gradients into each layer's accumulators.
    pub fn backward(&mut self, cache: &ForwardCache, grad: Tensor, at: GradAt) -> Result<(), ModelError> {
        let n = self.layers.len();
        if n == 0 {
            return Ok(());
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; n];
        grads[n - 1] = Some(grad);
        for i in (0..n).rev() {
            let Some(g) = grads[i].take() else { continue };
            let input = if i == 0 { &cache.input } else { &cache.outputs[i - 1] };
            // The graph input (or an Input layer reading it) never needs a gradient.
            let wants_dx = i > 0 && !(i == 1 && self.layers[0].kind == LayerKind::Input);
            let to_pre = |g: Tensor, act: Activation| -> Result<Tensor, ModelError> {
                if i == n - 1 && at == GradAt::Logits {
                    Ok(g)
                } else {
                    Ok(activation_backward(&cache.outputs[i], &g, act)?)
                }
            };
            let dx = match self.layers[i].kind {
                LayerKind::Input => None,
                LayerKind::Conv2D {
                    padding, activation: act, ..
                } => {
                    let dz = to_pre(g, act)?;
                    let p = self.params[i].as_mut().expect("conv layers carry parameters");
                    let cg = conv2d_backward(input, &p.weights, &dz, padding, wants_dx)?;
                    p.accumulate(&cg.dw, &cg.db);
                    cg.dx
                }
                LayerKind::Dense { activation: act, .. } => {
                    let dz = to_pre(g, act)?;
                    let p = self.params[i].as_mut().expect("dense layers carry parameters");
                    let dg = dense_backward(input, &p.weights, &dz)?;
                    p.accumulate(&dg.dw, &dg.db);
                    wants_dx.then_some(dg.dx)
                }
                LayerKind::MaxPool2D => {
                    let Aux::Pool(arg) = &cache.aux[i] else { unreachable!("pool cache") };
                    Some(maxpool2d_backward(&g, arg, input.shape())?)
                }
                LayerKind::UpSample2D => Some(upsample_backward(&g)?),
                LayerKind::Concatenate { skip } => {
                    let ca = input.shape()[3];
                    let (da, db) = split_channels(&g, ca)?;
                    add_grad(&mut grads[skip], db);
                    Some(da)
                }
                LayerKind::Dropout { .. } => {
                    let Aux::Mask(mask) = &cache.aux[i] else { unreachable!("dropout cache") };
                    Some(dropout_backward(&g, mask.as_deref()))
                }
                LayerKind::Flatten => Some(g.reshape(input.shape())?),
            };
            if let (Some(dx), true) = (dx, i > 0) {
                add_grad(&mut grads[i - 1], dx);
            }
        }
        Ok(())
    }
}

fn spatial(s: &[usize]) -> Option<[usize; 3]> {
    match *s {
        [h, w, c] => Some([h, w, c]),
        _ => None,
    }
}

fn add_grad(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        Some(t) => t.data_mut().iter_mut().zip(g.data()).for_each(|(a, b)| *a += b),
        None => *slot = Some(g),
    }
}
