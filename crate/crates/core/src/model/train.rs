use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::predict::{argmax, image_tensor};
use super::{GradAt, LayerKind, Mode, ModelError, ModelGraph};
use crate::augment::{augment_image, AugmentationConfig};
use crate::eval::{confusion_matrix, metrics_from_confusion, PixelCounts, PixelMetrics};
use crate::imaging::RasterImage;
use crate::nn::{adam_step, bce_grad_at_logits, loss_cce, Activation, AdamConfig, RngStream, Tensor, BCE_CLAMP};
use crate::watershed::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Binary cross-entropy against a sigmoid output (segmentation).
    Bce,
    /// Categorical cross-entropy against a softmax output (classification).
    Cce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub seed: u64,
    pub loss: LossKind,
    pub shuffle: bool,
    /// Channel multiplier used when the trained graph is a U-Net.
    pub width_mult: f64,
    /// Online augmentation of training images; sample `i` of epoch `e` uses draw index `e * N + i`.
    #[serde(default)]
    pub augmentation: Option<AugmentationConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            loss: LossKind::Cce,
            shuffle: true,
            width_mult: 1.0,
            augmentation: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("epochs and batch_size must be at least 1".into()));
        }
        if !(self.width_mult > 0.0 && self.width_mult <= 1.0) {
            return Err(ModelError::InvalidWidthMult(self.width_mult));
        }
        if let Some(a) = &self.augmentation {
            a.validate()?;
        }
        self.adam().validate()?;
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes(Vec<usize>),
    Masks(Vec<BinaryMask>),
}

/// Images already sized to the model input, with one target per image.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<RasterImage>,
    pub targets: Targets,
}

impl Dataset {
    pub fn classification(images: Vec<RasterImage>, labels: Vec<usize>) -> Self {
        assert_eq!(images.len(), labels.len(), "one label per image");
        Self {
            images,
            targets: Targets::Classes(labels),
        }
    }

    pub fn segmentation(images: Vec<RasterImage>, masks: Vec<BinaryMask>) -> Self {
        assert_eq!(images.len(), masks.len(), "one mask per image");
        Self {
            images,
            targets: Targets::Masks(masks),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            targets: match &self.targets {
                Targets::Classes(l) => Targets::Classes(indices.iter().map(|&i| l[i]).collect()),
                Targets::Masks(m) => Targets::Masks(indices.iter().map(|&i| m[i].clone()).collect()),
            },
        }
    }
}

/// Loss with classification (macro precision/recall/F1, overall accuracy) or
/// pixel metrics (recall = sensitivity, F1 = Dice).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: EpochMetrics,
    pub validation: Option<EpochMetrics>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

pub fn train(
    model: &mut ModelGraph,
    train_set: &Dataset,
    val_set: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<History, ModelError> {
    train_with(model, train_set, val_set, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    model: &mut ModelGraph,
    train_set: &Dataset,
    val_set: Option<&Dataset>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<History, ModelError> {
    cfg.validate()?;
    check_dataset(model, train_set, cfg.loss)?;
    if let Some(v) = val_set {
        check_dataset(model, v, cfg.loss)?;
    }
    let adam = cfg.adam();
    let n = train_set.len();
    let plain: Option<Vec<Tensor>> = cfg
        .augmentation
        .is_none()
        .then(|| train_set.images.iter().map(image_tensor).collect());

    let mut history = History::default();
    let mut step = 0u64;
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        if cfg.shuffle {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(epoch as u64);
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(cfg.batch_size) {
            let inputs: Vec<Tensor> = match (&plain, &cfg.augmentation) {
                (Some(t), _) => batch.iter().map(|&i| t[i].clone()).collect(),
                (None, Some(aug)) => batch
                    .iter()
                    .map(|&i| {
                        let draw = (epoch * n + i) as u64;
                        Ok(image_tensor(&augment_image(&train_set.images[i], aug, draw)?))
                    })
                    .collect::<Result<_, ModelError>>()?,
                (None, None) => unreachable!("plain tensors exist without augmentation"),
            };
            let x = Tensor::stack(&inputs.iter().collect::<Vec<_>>())?;
            step += 1;
            let cache = model.forward(&x, Mode::Train, &RngStream::new(cfg.seed, step))?;
            let target = target_tensor(train_set, batch, model.output_shape());
            let grad = match cfg.loss {
                LossKind::Cce => loss_cce(cache.output(), &target)?.1,
                LossKind::Bce => bce_grad_at_logits(cache.output(), &target)?,
            };
            model.backward(&cache, grad, GradAt::Logits)?;
            for p in model.params_mut().iter_mut().flatten() {
                adam_step(p, &adam, step);
            }
        }

        let train_metrics = evaluate(model, train_set, cfg.batch_size, cfg.loss)?;
        if !train_metrics.loss.is_finite() {
            return Err(ModelError::DivergedLoss { epoch: epoch + 1 });
        }
        let validation = val_set
            .map(|v| evaluate(model, v, cfg.batch_size, cfg.loss))
            .transpose()?;
        let record = EpochRecord {
            epoch: epoch + 1,
            train: train_metrics,
            validation,
        };
        on_epoch(&record);
        history.records.push(record);
    }
    Ok(history)
}

fn check_dataset(model: &ModelGraph, data: &Dataset, loss: LossKind) -> Result<(), ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let [h, w, c] = model.input_shape();
    for img in &data.images {
        if (img.height(), img.width(), img.channels()) != (h, w, c) {
            return Err(ModelError::ShapeError(format!(
                "image {}x{}x{} does not match model input {h}x{w}x{c}",
                img.width(),
                img.height(),
                img.channels()
            )));
        }
    }
    let last = model.layers().last().map(|l| l.kind);
    let out = model.output_shape();
    match (&data.targets, loss, last) {
        (
            Targets::Classes(labels),
            LossKind::Cce,
            Some(LayerKind::Dense {
                activation: Activation::Softmax,
                units,
            }),
        ) => {
            if let Some(&label) = labels.iter().find(|&&l| l >= units) {
                return Err(ModelError::LabelOutOfRange { label, classes: units });
            }
        }
        (
            Targets::Masks(masks),
            LossKind::Bce,
            Some(LayerKind::Conv2D {
                activation: Activation::Sigmoid,
                ..
            }),
        ) => {
            if masks.iter().any(|m| [m.height, m.width, 1] != out) {
                return Err(ModelError::ShapeError("mask size differs from model output".into()));
            }
        }
        _ => {
            return Err(ModelError::InvalidConfig(
                "targets, loss and output layer must be classes/CCE/softmax or masks/BCE/sigmoid".into(),
            ))
        }
    }
    Ok(())
}

fn target_tensor(data: &Dataset, batch: &[usize], out: &[usize]) -> Tensor {
    let mut shape = vec![batch.len()];
    shape.extend_from_slice(out);
    let per: usize = out.iter().product();
    let mut t = Tensor::zeros(&shape);
    let d = t.data_mut();
    for (row, &i) in batch.iter().enumerate() {
        match &data.targets {
            Targets::Classes(l) => d[row * per + l[i]] = 1.0,
            Targets::Masks(m) => {
                for (dst, &b) in d[row * per..(row + 1) * per].iter_mut().zip(&m[i].bits) {
                    *dst = if b { 1.0 } else { 0.0 };
                }
            }
        }
    }
    t
}

/// Inference-mode loss and metrics over a whole dataset, in index order.
pub(crate) fn evaluate(model: &ModelGraph, data: &Dataset, batch: usize, loss: LossKind) -> Result<EpochMetrics, ModelError> {
    let rng = RngStream::new(0, 0);
    let mut total = 0.0f64;
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    let mut pixels = PixelCounts::default();
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(batch) {
        let inputs: Vec<Tensor> = chunk.iter().map(|&i| image_tensor(&data.images[i])).collect();
        let x = Tensor::stack(&inputs.iter().collect::<Vec<_>>())?;
        let cache = model.forward(&x, Mode::Infer, &rng)?;
        let out = cache.output();
        let per = out.len() / chunk.len();
        for (row, &i) in chunk.iter().enumerate() {
            let p = &out.data()[row * per..(row + 1) * per];
            match &data.targets {
                Targets::Classes(l) => {
                    total -= (p[l[i]] as f64).clamp(BCE_CLAMP as f64, 1.0).ln();
                    truth.push(l[i]);
                    pred.push(argmax(p));
                }
                Targets::Masks(m) => {
                    let (lo, hi) = (BCE_CLAMP as f64, 1.0 - BCE_CLAMP as f64);
                    let mut s = 0.0f64;
                    for (&pi, &t) in p.iter().zip(&m[i].bits) {
                        let pc = (pi as f64).clamp(lo, hi);
                        s -= if t { pc.ln() } else { (1.0 - pc).ln() };
                        let fg = pi > 0.5;
                        match (fg, t) {
                            (true, true) => pixels.tp += 1,
                            (true, false) => pixels.fp += 1,
                            (false, true) => pixels.fn_ += 1,
                            (false, false) => pixels.tn += 1,
                        }
                    }
                    total += s / per as f64;
                }
            }
        }
    }
    let loss_value = total / data.len() as f64;
    Ok(match loss {
        LossKind::Cce => {
            let k = model.output_shape()[0];
            let m = metrics_from_confusion(&confusion_matrix(&truth, &pred, k).map_err(|e| ModelError::InvalidConfig(e.to_string()))?)
                .map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
            let s = m.summary();
            EpochMetrics {
                loss: loss_value,
                accuracy: s.accuracy,
                precision: s.precision,
                recall: s.recall,
                f1: s.f1,
            }
        }
        LossKind::Bce => {
            let m = PixelMetrics::from_counts(pixels);
            EpochMetrics {
                loss: loss_value,
                accuracy: m.accuracy,
                precision: m.precision,
                recall: m.sensitivity,
                f1: m.dice,
            }
        }
    })
}
