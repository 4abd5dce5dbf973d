use std::path::{Path, PathBuf};
use std::process::Command;

use hemoforge_cli::{
    cmd_classify, cmd_crossval, cmd_preprocess, cmd_segment, ingest, ClassifyOptions, CliError, Method, PipelineConfig,
};
use hemoforge_core::imaging::{decode_image, encode_image, RasterImage};
use hemoforge_core::model::{build_lwcnn, save_weights};
use hemoforge_core::synth::{disks_image, disks_mask, overlapping_disks, pattern_image, smear_image};

fn write(img: &RasterImage, path: &Path) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    encode_image(img, path).unwrap();
}

fn config(dir: &Path) -> PipelineConfig {
    PipelineConfig::new(dir.join("data"), dir.join("out"))
}

/// Ten smear images across two classes.
fn smear_tree(dir: &Path) {
    for i in 0..10 {
        let class = if i < 5 { "A" } else { "B" };
        write(&smear_image(90 + i, 80, 3, i as u64), &dir.join(format!("data/{class}/s{i}.png")));
    }
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if let Ok(rd) = std::fs::read_dir(dir) {
        for e in rd.flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(files_with_ext(&p, ext));
            } else if p.extension().is_some_and(|x| x == ext) {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn preprocess_resizes_every_image_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    smear_tree(dir.path());
    let cfg = config(dir.path());
    let first = cmd_preprocess(&cfg, None, None).unwrap();
    assert_eq!(first.written.len(), 10);
    assert!(first.failures.is_empty());
    let bytes: Vec<Vec<u8>> = first.written.iter().map(|p| std::fs::read(p).unwrap()).collect();
    for p in &first.written {
        let img = decode_image(p).unwrap();
        assert_eq!((img.width(), img.height()), (224, 224));
    }
    let second = cmd_preprocess(&cfg, None, None).unwrap();
    assert_eq!(second.written, first.written);
    for (p, b) in second.written.iter().zip(&bytes) {
        assert_eq!(&std::fs::read(p).unwrap(), b);
    }
}

#[test]
fn corrupt_image_is_reported_and_others_still_written() {
    let dir = tempfile::tempdir().unwrap();
    smear_tree(dir.path());
    let victim = dir.path().join("data/A/s2.png");
    let bytes = std::fs::read(&victim).unwrap();
    std::fs::write(&victim, &bytes[..bytes.len() / 3]).unwrap();
    let summary = cmd_preprocess(&config(dir.path()), None, None).unwrap();
    assert_eq!(summary.written.len(), 9);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].path, victim);
    assert!(summary.failures[0].message.contains("s2.png"));
}

#[test]
fn segment_overlapping_disks_and_blank() {
    let dir = tempfile::tempdir().unwrap();
    let (img, mask) = overlapping_disks();
    write(&img, &dir.path().join("data/cells/pair.png"));
    write(&RasterImage::filled(60, 60, 3, 200).unwrap(), &dir.path().join("data/cells/blank.png"));
    let cfg = config(dir.path());
    let summary = cmd_segment(&cfg, Method::Watershed, Some(&cfg.input_root), None, None).unwrap();
    assert_eq!(summary.images, 2);
    assert_eq!(summary.roi_files.len(), 2);
    assert_eq!(summary.no_markers, vec![dir.path().join("data/cells/blank.png")]);
    assert!(summary.failures.is_empty());

    let mut area = 0;
    for f in &summary.roi_files {
        assert!(f.starts_with(dir.path().join("out/rois/cells")));
        let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(f.with_extension("json")).unwrap()).unwrap();
        area += side["area"].as_u64().unwrap() as usize;
        assert_eq!(side["method"], "watershed");
    }
    assert_eq!(files_with_ext(&dir.path().join("out/rois"), "png").len(), 2);
    let expected = mask.count() as f64;
    assert!((area as f64 - expected).abs() / expected <= 0.02, "{area} vs {expected}");
}

#[test]
fn unet_mode_requires_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let r = cmd_segment(&cfg, Method::Unet, None, None, None);
    assert!(matches!(r, Err(CliError::MissingWeights(_))));
}

fn classifier_fixture(dir: &Path) -> (PipelineConfig, PathBuf) {
    let cfg = config(dir);
    let weights = dir.join("out/lwcnn.bin");
    std::fs::create_dir_all(weights.parent().unwrap()).unwrap();
    save_weights(&build_lwcnn(2).unwrap(), &weights).unwrap();
    std::fs::write(dir.join("out/lwcnn.bin.classes.json"), r#"["A", "B"]"#).unwrap();
    (cfg, weights)
}

#[test]
fn classify_counts_every_extracted_cell() {
    let dir = tempfile::tempdir().unwrap();
    let (mut cfg, weights) = classifier_fixture(dir.path());
    let disks = [(30.0, 30.0, 14.0), (90.0, 35.0, 15.0), (60.0, 90.0, 16.0)];
    write(&disks_image(120, 120, &disks, 220, 70), &dir.path().join("scan/three.png"));
    assert_eq!(disks_mask(120, 120, &disks).count() > 0, true);
    let input = dir.path().join("scan");
    let opts = ClassifyOptions {
        method: Method::Watershed,
        input: Some(&input),
        weights: Some(&weights),
        unet_weights: None,
    };
    let out = cmd_classify(&cfg, &opts).unwrap();
    assert_eq!(out.cells.len(), 3);
    assert_eq!(out.total_cells(), 3);
    assert_eq!(out.totals.iter().map(|t| t.class_name.as_str()).collect::<Vec<_>>(), vec!["A", "B", "uncertain"]);

    cfg.classifier.confidence_floor = 1.01;
    let out = cmd_classify(&cfg, &opts).unwrap();
    assert_eq!(out.totals.last().unwrap().count, 3);
    assert!(out.cells.iter().all(|c| c.class_name == "uncertain"));
}

#[test]
fn classify_empty_directory_and_missing_weights() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, weights) = classifier_fixture(dir.path());
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let opts = ClassifyOptions {
        method: Method::Watershed,
        input: Some(&empty),
        weights: Some(&weights),
        unet_weights: None,
    };
    let out = cmd_classify(&cfg, &opts).unwrap();
    assert_eq!(out.images, 0);
    assert!(out.totals.iter().all(|t| t.count == 0));

    let missing = dir.path().join("nope.bin");
    let opts = ClassifyOptions {
        weights: Some(&missing),
        ..opts
    };
    assert!(matches!(cmd_classify(&cfg, &opts), Err(CliError::MissingWeights(_))));
}

/// Small two-class pattern tree for quick cross-validation runs.
fn pattern_tree(dir: &Path, per_class: u64) {
    for (name, class) in [("Alpha", 0), ("Beta", 4)] {
        for i in 0..per_class {
            write(&pattern_image(class, i, 5), &dir.join(format!("data/{name}/{i:03}.png")));
        }
    }
}

#[test]
fn crossval_report_is_consistent_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    pattern_tree(dir.path(), 10);
    let mut cfg = config(dir.path());
    cfg.kfold.k = 3;
    cfg.classifier.training.epochs = 2;
    cfg.classifier.training.batch_size = 8;
    let a = cmd_crossval(&cfg, None, None).unwrap();
    assert_eq!(a.report.folds.len(), 3);
    assert!(a.report.average_is_consistent());
    assert_eq!(a.report.classes, vec!["Alpha", "Beta"]);
    let b = cmd_crossval(&cfg, None, Some(&dir.path().join("again"))).unwrap();
    assert_eq!(a.report.to_json(true).unwrap(), b.report.to_json(true).unwrap());

    let out = dir.path().join("out/crossval");
    let history = std::fs::read_to_string(out.join("fold_1_history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,train_accuracy"));
    assert_eq!(history.lines().count(), 3);
    let roc = std::fs::read_to_string(out.join("fold_2_roc.csv")).unwrap();
    assert!(roc.starts_with("curve,threshold,fpr,tpr"));
    assert!(roc.contains("micro,inf,0,0"));
    let table = std::fs::read_to_string(out.join("table.md")).unwrap();
    assert!(table.contains("Average"));
    let canon = a.report.to_json(true).unwrap();
    assert!(!canon.contains("runtime"));
    assert!(a.report.to_json(false).unwrap().contains("runtime"));
}

#[test]
fn crossval_rejects_single_fold() {
    let mut cfg = PipelineConfig::new("a", "b");
    cfg.kfold.k = 1;
    assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
}

#[test]
fn ingest_sees_roi_tree_written_by_segment() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = overlapping_disks();
    write(&img, &dir.path().join("data/cells/pair.png"));
    let cfg = config(dir.path());
    cmd_segment(&cfg, Method::Watershed, None, None, None).unwrap();
    let idx = ingest(&dir.path().join("out/rois")).unwrap();
    assert_eq!(idx.classes, vec!["cells"]);
    assert_eq!(idx.entries.len(), 2);
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hemoforge")).args(args).env("RUST_LOG", "error").output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    smear_tree(dir.path());
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"schema_version": 1, "input_root": "data", "output_root": "out"}"#).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    assert_eq!(binary(&["preprocess", "--config", cfg]).status.code(), Some(0));

    let victim = dir.path().join("data/B/s7.png");
    std::fs::write(&victim, b"\x89PNG\r\n\x1a\ntruncated").unwrap();
    assert_eq!(binary(&["preprocess", "--config", cfg]).status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 1, "input_root": "data", "output_root": "out", "extra": true}"#).unwrap();
    assert_eq!(binary(&["preprocess", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(binary(&["preprocess"]).status.code(), Some(2));
}
