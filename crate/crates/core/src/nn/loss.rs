use super::{NnError, Result, Tensor};

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` inside the logarithms.
pub const BCE_CLAMP: f32 = 1e-7;

fn same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(NnError::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// Mean binary cross-entropy and its gradient with respect to `pred`.
pub fn loss_bce(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    same_shape(pred, target)?;
    let n = pred.len() as f64;
    let (lo, hi) = (BCE_CLAMP as f64, 1.0 - BCE_CLAMP as f64);
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(pred.len());
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let (pc, t) = ((p as f64).clamp(lo, hi), t as f64);
        loss -= t * pc.ln() + (1.0 - t) * (1.0 - pc).ln();
        // d/dp of the clamped expression; zero where the clamp is active.
        let g = if (p as f64) < lo || (p as f64) > hi {
            0.0
        } else {
            (pc - t) / (pc * (1.0 - pc))
        };
        grad.push((g / n) as f32);
    }
    Ok((loss / n, Tensor::new(pred.shape(), grad)?))
}

/// Gradient of the mean binary cross-entropy with respect to the logits of a
/// sigmoid output: `(p - t) / numel`.
pub fn bce_grad_at_logits(probs: &Tensor, target: &Tensor) -> Result<Tensor> {
    same_shape(probs, target)?;
    let n = probs.len() as f32;
    Tensor::new(
        probs.shape(),
        probs.data().iter().zip(target.data()).map(|(p, t)| (p - t) / n).collect(),
    )
}

/// Mean categorical cross-entropy of softmax rows against one-hot rows, and
/// the fused softmax + cross-entropy gradient at the logits, `(p - t) / N`.
pub fn loss_cce(probs: &Tensor, onehot: &Tensor) -> Result<(f64, Tensor)> {
    same_shape(probs, onehot)?;
    let (n, k) = probs.dims2()?;
    let mut loss = 0.0f64;
    for (row, (p, t)) in probs.data().chunks_exact(k).zip(onehot.data().chunks_exact(k)).enumerate() {
        let sum: f32 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-4 {
            return Err(NnError::NotNormalized { row, sum });
        }
        for (&pi, &ti) in p.iter().zip(t) {
            if ti != 0.0 {
                loss -= ti as f64 * (pi as f64).clamp(BCE_CLAMP as f64, 1.0).ln();
            }
        }
    }
    let grad = probs
        .data()
        .iter()
        .zip(onehot.data())
        .map(|(p, t)| (p - t) / n as f32)
        .collect();
    Ok((loss / n as f64, Tensor::new(&[n, k], grad)?))
}
