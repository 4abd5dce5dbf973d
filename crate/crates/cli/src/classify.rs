use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hemoforge_core::model::{build_lwcnn_with, load_weights, predict_batch, ModelGraph};
use hemoforge_core::watershed::BBox;

use crate::config::PipelineConfig;
use crate::dataset::{classifier_input, collect_images, load_image};
use crate::error::{write_file, CliError, ItemFailure, Result};
use crate::segment::{Method, Segmenter};
use crate::training::classes_path;

pub const UNCERTAIN: &str = "uncertain";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub source: PathBuf,
    pub label: i32,
    pub bbox: BBox,
    pub class_name: String,
    pub confidence: f32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTotal {
    pub class_name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationOutput {
    pub images: usize,
    pub cells: Vec<CellRecord>,
    /// Every class in id order, then the uncertain bucket.
    pub totals: Vec<ClassTotal>,
    pub no_markers: Vec<PathBuf>,
    pub failures: Vec<ItemFailure>,
}

impl ClassificationOutput {
    pub fn total_cells(&self) -> usize {
        self.totals.iter().map(|t| t.count).sum()
    }
}

/// Classifier weights and their class list (`<weights>.classes.json`).
pub fn load_classifier(cfg: &PipelineConfig, weights: &Path) -> Result<(ModelGraph, Vec<String>)> {
    if !weights.is_file() {
        return Err(CliError::MissingWeights(weights.to_path_buf()));
    }
    let names = classes_path(weights);
    let text = std::fs::read_to_string(&names).map_err(|e| CliError::io(&names, e))?;
    let classes: Vec<String> = serde_json::from_str(&text)?;
    let mut model = build_lwcnn_with(classes.len(), cfg.classifier.dropout)?;
    load_weights(&mut model, weights)?;
    Ok((model, classes))
}

pub struct ClassifyOptions<'a> {
    pub method: Method,
    pub input: Option<&'a Path>,
    pub weights: Option<&'a Path>,
    /// U-Net weights for `Method::Unet`.
    pub unet_weights: Option<&'a Path>,
}

/// Segments every input image, classifies each ROI and tallies per-class counts.
pub fn cmd_classify(cfg: &PipelineConfig, opts: &ClassifyOptions) -> Result<ClassificationOutput> {
    let weights = opts.weights.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_root.join("lwcnn.bin"));
    let (model, classes) = load_classifier(cfg, &weights)?;
    let segmenter = Segmenter::new(cfg, opts.method, opts.unet_weights)?;
    let input = opts.input.unwrap_or(&cfg.input_root);
    let images = collect_images(input)?;

    let results: Vec<Result<Option<Vec<CellRecord>>>> = images
        .par_iter()
        .map(|path| {
            let img = load_image(path)?;
            let Some(rois) = segmenter.rois(&img).map_err(|e| e.at(path))? else {
                return Ok(None);
            };
            let inputs = rois.iter().map(|r| classifier_input(&r.crop)).collect::<Result<Vec<_>>>()?;
            let preds = predict_batch(&model, &inputs)?;
            Ok(Some(
                rois.iter()
                    .zip(preds)
                    .map(|(roi, p)| CellRecord {
                        source: path.clone(),
                        label: roi.label,
                        bbox: roi.bbox,
                        class_name: if p.confidence < cfg.classifier.confidence_floor {
                            UNCERTAIN.to_string()
                        } else {
                            classes[p.class].clone()
                        },
                        confidence: p.confidence,
                    })
                    .collect(),
            ))
        })
        .collect();

    let mut output = ClassificationOutput {
        images: images.len(),
        cells: Vec::new(),
        totals: classes
            .iter()
            .chain(std::iter::once(&UNCERTAIN.to_string()))
            .map(|c| ClassTotal {
                class_name: c.clone(),
                count: 0,
            })
            .collect(),
        no_markers: Vec::new(),
        failures: Vec::new(),
    };
    for (path, r) in images.iter().zip(results) {
        match r {
            Ok(Some(cells)) => output.cells.extend(cells),
            Ok(None) => output.no_markers.push(path.clone()),
            Err(e) => {
                log::error!("{e}");
                output.failures.push(ItemFailure {
                    path: path.clone(),
                    message: e.to_string(),
                });
            }
        }
    }
    for cell in &output.cells {
        let slot = output
            .totals
            .iter_mut()
            .find(|t| t.class_name == cell.class_name)
            .expect("every name has a total");
        slot.count += 1;
    }
    Ok(output)
}

/// Runs [`cmd_classify`] and writes the full record set to `out`
/// (default `<output_root>/classification.json`).
pub fn cmd_classify_to(cfg: &PipelineConfig, opts: &ClassifyOptions, out: Option<&Path>) -> Result<ClassificationOutput> {
    let output = cmd_classify(cfg, opts)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_root.join("classification.json"));
    write_file(&path, serde_json::to_string_pretty(&output)? + "\n")?;
    Ok(output)
}

/// Runs [`cmd_classify`] and writes only the per-class totals (default `<output_root>/counts.json`).
pub fn cmd_count(cfg: &PipelineConfig, opts: &ClassifyOptions, out: Option<&Path>) -> Result<ClassificationOutput> {
    let output = cmd_classify(cfg, opts)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_root.join("counts.json"));
    write_file(&path, serde_json::to_string_pretty(&output.totals)? + "\n")?;
    Ok(output)
}

pub fn render_totals(totals: &[ClassTotal]) -> String {
    let width = totals.iter().map(|t| t.class_name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  Count\n", "Class");
    for t in totals {
        s += &format!("{:<width$}  {}\n", t.class_name, t.count);
    }
    s += &format!("{:<width$}  {}\n", "Total", totals.iter().map(|t| t.count).sum::<usize>());
    s
}
