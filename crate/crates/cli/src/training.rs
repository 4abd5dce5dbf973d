use std::path::{Path, PathBuf};

use rayon::prelude::*;

use hemoforge_core::eval::{kfold_split, pixel_metrics, PixelCounts, PixelMetrics};
use hemoforge_core::imaging::resize_bilinear;
use hemoforge_core::model::{build_lwcnn_with, build_unet_sized, save_weights, segment, train_with, Dataset, History, ModelGraph};

use crate::config::PipelineConfig;
use crate::crossval::{load_classification, write_history};
use crate::dataset::{ingest, load_image, load_mask, to_rgb};
use crate::error::{write_file, CliError, Result};
use crate::report::{SegmentationReport, REPORT_VERSION};

/// Class names stored next to classifier weights: `<weights>.classes.json`.
pub fn classes_path(weights: &Path) -> PathBuf {
    let mut name = weights.file_name().unwrap_or_default().to_os_string();
    name.push(".classes.json");
    weights.with_file_name(name)
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: ModelGraph,
    pub classes: Vec<String>,
    pub history: History,
    pub weights: PathBuf,
}

/// Trains the classifier on the whole labelled ROI tree and saves its weights.
pub fn cmd_train_classifier(cfg: &PipelineConfig, input: Option<&Path>, out: Option<&Path>) -> Result<TrainedClassifier> {
    let index = ingest(input.unwrap_or(&cfg.input_root))?;
    let data = load_classification(&index)?;
    let train_cfg = cfg.classifier_training();
    let mut model = build_lwcnn_with(index.classes.len(), cfg.classifier.dropout)?;
    model.reinitialize(train_cfg.seed);
    let history = train_with(&mut model, &data, None, &train_cfg, |r| {
        log::info!("epoch {}: loss {:.4} acc {:.4}", r.epoch, r.train.loss, r.train.accuracy);
    })?;
    let weights = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_root.join("lwcnn.bin"));
    if let Some(dir) = weights.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    save_weights(&model, &weights)?;
    write_file(&classes_path(&weights), serde_json::to_string_pretty(&index.classes)?)?;
    write_history(&weights.with_extension("history.csv"), &history)?;
    Ok(TrainedClassifier {
        model,
        classes: index.classes,
        history,
        weights,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedUnet {
    pub model: ModelGraph,
    pub history: History,
    pub report: SegmentationReport,
    pub weights: PathBuf,
}

/// Trains the U-Net on images with masks in the sibling `-masks` tree, holding
/// out one fold of a `round(1 / test_fraction)`-fold plan for pixel metrics.
pub fn cmd_train_unet(cfg: &PipelineConfig, input: Option<&Path>, out: Option<&Path>) -> Result<TrainedUnet> {
    let root = input.unwrap_or(&cfg.input_root);
    let index = ingest(root)?;
    let u = &cfg.unet;
    let s = u.input_size;
    let entries: Vec<_> = index.entries.iter().filter(|e| e.mask.is_some()).collect();
    if entries.is_empty() {
        return Err(CliError::EmptyDataset(crate::dataset::mask_root(root)));
    }
    let loaded = entries
        .par_iter()
        .map(|e| {
            let img = resize_bilinear(&to_rgb(&load_image(&e.path)?)?, s, s)?;
            let mask = load_mask(e.mask.as_ref().expect("filtered"), s, s)?;
            Ok((img, mask))
        })
        .collect::<Result<Vec<_>>>()?;
    let (images, masks): (Vec<_>, Vec<_>) = loaded.into_iter().unzip();
    let data = Dataset::segmentation(images, masks);

    let folds = ((1.0 / u.test_fraction).round() as usize).max(2);
    let plan = kfold_split(&vec![0; data.len()], folds, cfg.kfold.seed, false)?;
    let (train_idx, test_idx) = (plan.train_indices(0), plan.test_indices(0));
    let (train_set, test_set) = (data.subset(&train_idx), data.subset(&test_idx));

    let mut model = build_unet_sized(u.training.width_mult, s)?;
    model.reinitialize(u.training.seed);
    let history = train_with(&mut model, &train_set, Some(&test_set), &u.training, |r| {
        log::info!("epoch {}: loss {:.4} dice {:.4}", r.epoch, r.train.loss, r.train.f1);
    })?;

    let per_image = test_set
        .images
        .iter()
        .zip(match &test_set.targets {
            hemoforge_core::model::Targets::Masks(m) => m,
            _ => unreachable!("segmentation dataset"),
        })
        .map(|(img, gt)| Ok(pixel_metrics(&segment(&model, img, u.threshold)?, gt)?))
        .collect::<Result<Vec<PixelMetrics>>>()?;
    let n = per_image.len() as f64;
    let pooled = per_image.iter().fold(PixelCounts::default(), |a, m| a + m.counts);
    let report = SegmentationReport {
        version: REPORT_VERSION,
        config: cfg.clone(),
        test_images: test_idx.iter().map(|&i| entries[i].path.display().to_string()).collect(),
        mean_iou: per_image.iter().map(|m| m.iou).sum::<f64>() / n,
        mean_dice: per_image.iter().map(|m| m.dice).sum::<f64>() / n,
        pooled: PixelMetrics::from_counts(pooled),
        per_image,
    };

    let weights = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_root.join("unet.bin"));
    if let Some(dir) = weights.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    save_weights(&model, &weights)?;
    write_history(&weights.with_extension("history.csv"), &history)?;
    write_file(&weights.with_extension("report.json"), report.to_json()?)?;
    log::info!("held-out mean IoU {:.4}, mean Dice {:.4}", report.mean_iou, report.mean_dice);
    Ok(TrainedUnet {
        model,
        history,
        report,
        weights,
    })
}
