use super::{RngStream, Tensor};

/// Uniform in `±sqrt(6 / fan_in)`.
pub fn he_uniform(shape: &[usize], fan_in: usize, rng: &mut RngStream) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt() as f32;
    Tensor::from_fn(shape, |_| rng.uniform(-bound, bound))
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut RngStream) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
    Tensor::from_fn(shape, |_| rng.uniform(-bound, bound))
}
