use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use hemoforge_core::eval::{aggregate_folds, confusion_matrix, kfold_split, metrics_from_confusion, roc_auc, RocCurve};
use hemoforge_core::imaging::RasterImage;
use hemoforge_core::model::{build_lwcnn_with, predict_batch, train_with, Dataset, EpochMetrics, EpochRecord, History, TrainConfig};

use crate::config::PipelineConfig;
use crate::dataset::{classifier_input, ingest, load_image, DatasetIndex};
use crate::error::{write_file, Result};
use crate::report::{sig6, FoldReport, Report, RocSummary, Runtime, REPORT_VERSION};

/// Decodes every indexed image into a classifier input.
pub fn load_classification(index: &DatasetIndex) -> Result<Dataset> {
    let images = index
        .entries
        .par_iter()
        .map(|e| load_image(&e.path).and_then(|img| classifier_input(&img).map_err(|err| err.at(&e.path))))
        .collect::<Result<Vec<RasterImage>>>()?;
    Ok(Dataset::classification(images, index.labels()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalOutput {
    pub report: Report,
    pub histories: Vec<History>,
    pub report_path: PathBuf,
}

/// Trains a fresh classifier per fold on the other folds and evaluates it on
/// the held-out one, writing the report, per-fold history and ROC curves.
pub fn cmd_crossval(cfg: &PipelineConfig, input: Option<&Path>, out: Option<&Path>) -> Result<CrossvalOutput> {
    let started = Instant::now();
    let index = ingest(input.unwrap_or(&cfg.input_root))?;
    let data = load_classification(&index)?;
    let k_classes = index.classes.len();
    let plan = kfold_split(&index.labels(), cfg.kfold.k, cfg.kfold.seed, cfg.kfold.stratified)?;
    let default_out = cfg.output_root.join("crossval");
    let out = out.unwrap_or(&default_out);
    let base = cfg.classifier_training();

    let mut folds = Vec::new();
    let mut confusion = Vec::new();
    let mut roc_summary = Vec::new();
    let mut histories = Vec::new();
    let mut fold_seconds = Vec::new();
    for fold in 0..plan.k {
        let t0 = Instant::now();
        let (train_idx, test_idx) = (plan.train_indices(fold), plan.test_indices(fold));
        let (train_set, test_set) = (data.subset(&train_idx), data.subset(&test_idx));
        let seed = base.seed.wrapping_add(fold as u64);
        let train_cfg = TrainConfig { seed, ..base.clone() };
        let mut model = build_lwcnn_with(k_classes, cfg.classifier.dropout)?;
        model.reinitialize(seed);
        let history = train_with(&mut model, &train_set, Some(&test_set), &train_cfg, |r| {
            log::info!("fold {} epoch {}: {}", fold + 1, r.epoch, describe(r));
        })?;

        let preds = predict_batch(&model, &test_set.images)?;
        let truth: Vec<usize> = test_idx.iter().map(|&i| index.entries[i].class_id).collect();
        let predicted: Vec<usize> = preds.iter().map(|p| p.class).collect();
        let scores: Vec<Vec<f64>> = preds
            .iter()
            .map(|p| p.distribution.iter().map(|&v| v as f64).collect())
            .collect();
        let cm = confusion_matrix(&truth, &predicted, k_classes)?;
        let class_metrics = metrics_from_confusion(&cm)?;
        let roc = roc_auc(&scores, &truth, k_classes)?;

        write_history(&out.join(format!("fold_{}_history.csv", fold + 1)), &history)?;
        write_roc(&out.join(format!("fold_{}_roc.csv", fold + 1)), &index.classes, &roc.per_class, roc.micro.as_ref())?;

        folds.push(FoldReport {
            fold: fold + 1,
            train_size: train_idx.len(),
            test_size: test_idx.len(),
            metrics: class_metrics.summary(),
            class_metrics,
        });
        confusion.push(cm);
        roc_summary.push(RocSummary::from(&roc));
        histories.push(history);
        fold_seconds.push(t0.elapsed().as_secs_f64());
        log::info!("fold {} held-out accuracy {:.4}", fold + 1, folds[fold].metrics.accuracy);
    }

    let fold_sets: Vec<_> = folds.iter().map(|f| f.metrics).collect();
    let report = Report {
        version: REPORT_VERSION,
        config: cfg.clone(),
        classes: index.classes.clone(),
        average: aggregate_folds(&fold_sets)?,
        folds,
        confusion,
        roc_summary,
        runtime: Some(Runtime {
            fold_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        }),
    };
    let report_path = out.join("report.json");
    write_file(&report_path, report.to_json(false)?)?;
    write_file(&out.join("table.md"), report.table()?)?;
    Ok(CrossvalOutput {
        report,
        histories,
        report_path,
    })
}

fn describe(r: &EpochRecord) -> String {
    let t = &r.train;
    match &r.validation {
        Some(v) => format!(
            "loss {:.4} acc {:.4} | val loss {:.4} acc {:.4}",
            t.loss, t.accuracy, v.loss, v.accuracy
        ),
        None => format!("loss {:.4} acc {:.4}", t.loss, t.accuracy),
    }
}

fn metric_fields(m: Option<&EpochMetrics>) -> Vec<String> {
    match m {
        Some(m) => [m.loss, m.accuracy, m.precision, m.recall, m.f1]
            .iter()
            .map(|&v| sig6(v).to_string())
            .collect(),
        None => vec![String::new(); 5],
    }
}

/// One row per epoch with train and validation loss, accuracy, precision, recall and F1.
pub fn write_history(path: &Path, history: &History) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let names = ["loss", "accuracy", "precision", "recall", "f1"];
    let mut header = vec!["epoch".to_string()];
    header.extend(names.iter().map(|n| format!("train_{n}")));
    header.extend(names.iter().map(|n| format!("val_{n}")));
    w.write_record(&header)?;
    for r in &history.records {
        let mut row = vec![r.epoch.to_string()];
        row.extend(metric_fields(Some(&r.train)));
        row.extend(metric_fields(r.validation.as_ref()));
        w.write_record(&row)?;
    }
    write_file(path, w.into_inner().expect("in-memory writer"))
}

/// Points of every one-vs-rest curve plus the pooled micro curve.
pub fn write_roc(path: &Path, classes: &[String], per_class: &[Option<RocCurve>], micro: Option<&RocCurve>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["curve", "threshold", "fpr", "tpr"])?;
    let named = classes
        .iter()
        .map(String::as_str)
        .zip(per_class.iter().map(Option::as_ref))
        .chain(std::iter::once(("micro", micro)));
    for (name, curve) in named {
        let Some(c) = curve else { continue };
        for i in 0..c.thresholds.len() {
            w.write_record([
                name.to_string(),
                sig6(c.thresholds[i]).to_string(),
                sig6(c.fpr[i]).to_string(),
                sig6(c.tpr[i]).to_string(),
            ])?;
        }
    }
    write_file(path, w.into_inner().expect("in-memory writer"))
}
