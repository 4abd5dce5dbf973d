use serde::{Deserialize, Serialize};

use super::{NnError, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NnError::InvalidConfig(format!("Adam {self:?}")))
        }
    }
}

/// Weights, bias, their gradients and Adam moments for one layer.
///
/// Gradient and moment buffers are allocated on first use.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Tensor,
    pub bias: Tensor,
    pub grad_weights: Option<Tensor>,
    pub grad_bias: Option<Tensor>,
    moments: Option<[Vec<f32>; 4]>,
}

impl LayerParams {
    pub fn new(weights: Tensor, bias: Tensor) -> Self {
        Self {
            weights,
            bias,
            grad_weights: None,
            grad_bias: None,
            moments: None,
        }
    }

    pub fn count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Adds to the stored gradients, allocating them if needed.
    pub fn accumulate(&mut self, dw: &Tensor, db: &Tensor) {
        add_into(&mut self.grad_weights, dw);
        add_into(&mut self.grad_bias, db);
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights = None;
        self.grad_bias = None;
    }

    /// First and second moments of weights then bias, if any step has run.
    pub fn moments(&self) -> Option<&[Vec<f32>; 4]> {
        self.moments.as_ref()
    }
}

fn add_into(slot: &mut Option<Tensor>, g: &Tensor) {
    match slot {
        Some(t) => t.data_mut().iter_mut().zip(g.data()).for_each(|(a, b)| *a += b),
        None => *slot = Some(g.clone()),
    }
}

/// One Adam update at step `t` (1-based) followed by clearing the gradients.
/// A layer without accumulated gradients is treated as having zero gradients.
pub fn adam_step(params: &mut LayerParams, cfg: &AdamConfig, t: u64) {
    assert!(t >= 1, "Adam step counter starts at 1");
    let (Some(gw), Some(gb)) = (params.grad_weights.take(), params.grad_bias.take()) else {
        params.zero_grad();
        return;
    };
    let (nw, nb) = (params.weights.len(), params.bias.len());
    let moments = params
        .moments
        .get_or_insert_with(|| [vec![0.0; nw], vec![0.0; nw], vec![0.0; nb], vec![0.0; nb]]);
    let c1 = 1.0 - (cfg.beta1 as f64).powi(t as i32);
    let c2 = 1.0 - (cfg.beta2 as f64).powi(t as i32);
    let [mw, vw, mb, vb] = moments;
    update(params.weights.data_mut(), gw.data(), mw, vw, cfg, c1, c2);
    update(params.bias.data_mut(), gb.data(), mb, vb, cfg, c1, c2);
}

fn update(theta: &mut [f32], g: &[f32], m: &mut [f32], v: &mut [f32], cfg: &AdamConfig, c1: f64, c2: f64) {
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    for i in 0..theta.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let m_hat = m[i] as f64 / c1;
        let v_hat = v[i] as f64 / c2;
        theta[i] -= (cfg.lr as f64 * m_hat / (v_hat.sqrt() + cfg.epsilon as f64)) as f32;
    }
}
