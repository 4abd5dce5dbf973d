use serde::{Deserialize, Serialize};

use super::{Mode, ModelError, ModelGraph};
use crate::imaging::{resize_bilinear, RasterImage};
use crate::nn::{RngStream, Tensor};
use crate::watershed::BinaryMask;

/// `[1, H, W, C]` tensor of unit-scaled samples.
pub fn image_tensor(img: &RasterImage) -> Tensor {
    Tensor::new(&[1, img.height(), img.width(), img.channels()], img.unit_samples()).expect("sample count matches shape")
}

/// Index of the largest value; ties resolve to the lowest index.
pub(crate) fn argmax(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    pub confidence: f32,
    pub distribution: Vec<f32>,
}

fn fit_input(model: &ModelGraph, img: &RasterImage) -> Result<RasterImage, ModelError> {
    let [h, w, c] = model.input_shape();
    if img.channels() != c {
        return Err(ModelError::ShapeError(format!(
            "model expects {c} channel(s), image has {}",
            img.channels()
        )));
    }
    if (img.width(), img.height()) == (w, h) {
        Ok(img.clone())
    } else {
        Ok(resize_bilinear(img, w, h)?)
    }
}

fn infer(model: &ModelGraph, imgs: &[RasterImage]) -> Result<Tensor, ModelError> {
    let inputs = imgs
        .iter()
        .map(|img| fit_input(model, img).map(|i| image_tensor(&i)))
        .collect::<Result<Vec<_>, _>>()?;
    let x = Tensor::stack(&inputs.iter().collect::<Vec<_>>())?;
    let cache = model.forward(&x, Mode::Infer, &RngStream::new(0, 0))?;
    Ok(cache.output().clone())
}

/// Classifies one image, resizing it to the model input first.
pub fn predict(model: &ModelGraph, img: &RasterImage) -> Result<Prediction, ModelError> {
    Ok(predict_batch(model, std::slice::from_ref(img))?.remove(0))
}

pub fn predict_batch(model: &ModelGraph, imgs: &[RasterImage]) -> Result<Vec<Prediction>, ModelError> {
    if imgs.is_empty() {
        return Ok(Vec::new());
    }
    let out = infer(model, imgs)?;
    let k = out.len() / imgs.len();
    Ok(out
        .data()
        .chunks(k)
        .map(|p| {
            let class = argmax(p);
            Prediction {
                class,
                confidence: p[class],
                distribution: p.to_vec(),
            }
        })
        .collect())
}

/// Foreground probability per pixel at the model's output resolution.
pub fn segment_probabilities(unet: &ModelGraph, img: &RasterImage) -> Result<Vec<f32>, ModelError> {
    Ok(infer(unet, std::slice::from_ref(img))?.into_data())
}

/// Pixels with probability `>= threshold` are foreground, at the model's output resolution.
pub fn segment(unet: &ModelGraph, img: &RasterImage, threshold: f32) -> Result<BinaryMask, ModelError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ModelError::InvalidConfig(format!("threshold {threshold} outside [0, 1]")));
    }
    let out = unet.output_shape();
    let probs = segment_probabilities(unet, img)?;
    let bits = probs
        .iter()
        .map(|&p| if threshold >= 1.0 { p > 1.0 } else { p >= threshold })
        .collect();
    Ok(BinaryMask::new(out[1], out[0], bits))
}
