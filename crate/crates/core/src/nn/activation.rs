use serde::{Deserialize, Serialize};

use super::{NnError, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    /// Normalizes over the last axis.
    Softmax,
}

#[inline]
pub(crate) fn sigmoid(v: f32) -> f32 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn activation(x: &Tensor, kind: Activation) -> Tensor {
    let mut y = x.clone();
    match kind {
        Activation::Linear => {}
        Activation::Relu => y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Sigmoid => y.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v)),
        Activation::Softmax => {
            let k = *x.shape().last().expect("rank >= 1");
            for row in y.data_mut().chunks_exact_mut(k.max(1)) {
                let m = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                let mut sum = 0.0f32;
                for v in row.iter_mut() {
                    *v = (*v - m).exp();
                    sum += *v;
                }
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }
    y.debug_check();
    y
}

/// Gradient with respect to the activation input, given the forward output `y`.
pub fn activation_backward(y: &Tensor, dy: &Tensor, kind: Activation) -> Result<Tensor> {
    if y.shape() != dy.shape() {
        return Err(NnError::ShapeMismatch(format!("{:?} vs {:?}", y.shape(), dy.shape())));
    }
    let mut dx = dy.clone();
    let yd = y.data();
    match kind {
        Activation::Linear => {}
        Activation::Relu => dx.data_mut().iter_mut().zip(yd).for_each(|(g, &o)| {
            if o <= 0.0 {
                *g = 0.0
            }
        }),
        Activation::Sigmoid => dx.data_mut().iter_mut().zip(yd).for_each(|(g, &o)| *g *= o * (1.0 - o)),
        Activation::Softmax => {
            let k = *y.shape().last().expect("rank >= 1");
            for (g, o) in dx.data_mut().chunks_exact_mut(k.max(1)).zip(yd.chunks_exact(k.max(1))) {
                let dot: f32 = g.iter().zip(o).map(|(a, b)| a * b).sum();
                g.iter_mut().zip(o).for_each(|(gi, &oi)| *gi = oi * (*gi - dot));
            }
        }
    }
    Ok(dx)
}
