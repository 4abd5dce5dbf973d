use serde::{Deserialize, Serialize};

use super::{NnError, Result, RngStream, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropoutMode {
    Train,
    Infer,
}

/// Inverted dropout. In `Train` mode element `i` is kept when the `i`-th
/// uniform draw of `rng` is at least `rate`, and survivors are scaled by
/// `1 / (1 - rate)`. Returns the output and the per-element multiplier
/// (absent in `Infer` mode or at rate 0, where the op is the identity).
pub fn dropout(x: &Tensor, rate: f32, mode: DropoutMode, rng: &RngStream) -> Result<(Tensor, Option<Vec<f32>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::InvalidRate(rate));
    }
    if mode == DropoutMode::Infer || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let scale = 1.0 / (1.0 - rate);
    let mut draws = rng.clone();
    let mask: Vec<f32> = (0..x.len())
        .map(|_| if draws.next_f32() < rate { 0.0 } else { scale })
        .collect();
    let mut y = x.clone();
    y.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
    Ok((y, Some(mask)))
}

pub fn dropout_backward(dy: &Tensor, mask: Option<&[f32]>) -> Tensor {
    let mut dx = dy.clone();
    if let Some(mask) = mask {
        dx.data_mut().iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
    }
    dx
}
