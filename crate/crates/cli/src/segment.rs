use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hemoforge_core::imaging::{encode_image, resize_bilinear, RasterImage};
use hemoforge_core::model::{build_unet_sized, load_weights, segment, ModelGraph};
use hemoforge_core::watershed::{segment_mask, segment_watershed, BBox, Roi, WatershedError};

use crate::config::PipelineConfig;
use crate::dataset::{collect_images, load_image, to_rgb};
use crate::error::{write_file, CliError, ItemFailure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Markers from Otsu and distance peaks, flooded over the image gradient.
    #[default]
    Watershed,
    /// U-Net mask, split into cells by flooding its distance field.
    Unet,
}

/// JSON written beside every ROI image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSidecar {
    pub source: PathBuf,
    pub label: i32,
    pub bbox: BBox,
    pub area: usize,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub images: usize,
    pub roi_files: Vec<PathBuf>,
    /// Images in which no marker was found; they produce no ROI.
    pub no_markers: Vec<PathBuf>,
    pub failures: Vec<ItemFailure>,
}

/// Everything needed to turn one image into ROIs.
pub struct Segmenter<'a> {
    cfg: &'a PipelineConfig,
    method: Method,
    unet: Option<ModelGraph>,
}

impl<'a> Segmenter<'a> {
    /// U-Net mode loads `weights`, or `<output_root>/unet.bin` when absent.
    pub fn new(cfg: &'a PipelineConfig, method: Method, weights: Option<&Path>) -> Result<Self> {
        let unet = match method {
            Method::Watershed => None,
            Method::Unet => {
                let path = weights.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_root.join("unet.bin"));
                if !path.is_file() {
                    return Err(CliError::MissingWeights(path));
                }
                let mut model = build_unet_sized(cfg.unet.training.width_mult, cfg.unet.input_size)?;
                load_weights(&mut model, &path)?;
                Some(model)
            }
        };
        Ok(Self { cfg, method, unet })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// ROIs of one image; `Ok(None)` when no marker is found.
    pub fn rois(&self, img: &RasterImage) -> Result<Option<Vec<Roi>>> {
        let img = to_rgb(img)?;
        let seg = match &self.unet {
            None => segment_watershed(&img, &self.cfg.watershed),
            Some(unet) => {
                let s = self.cfg.unet.input_size;
                let img = resize_bilinear(&img, s, s)?;
                let mask = segment(unet, &img, self.cfg.unet.threshold)?;
                segment_mask(&mask, &img, &self.cfg.watershed)
            }
        };
        match seg {
            Ok(s) => Ok(Some(s.rois)),
            Err(WatershedError::NoMarkersFound) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

fn default_input(cfg: &PipelineConfig) -> PathBuf {
    let pre = cfg.output_root.join("preprocessed");
    if pre.is_dir() {
        pre
    } else {
        cfg.input_root.clone()
    }
}

enum Outcome {
    Rois(Vec<PathBuf>),
    NoMarkers,
}

/// Segments every image below the input directory and writes each ROI as
/// `<out>/<relative dir>/<stem>_<label>.png` with a JSON sidecar.
pub fn cmd_segment(
    cfg: &PipelineConfig,
    method: Method,
    input: Option<&Path>,
    out: Option<&Path>,
    weights: Option<&Path>,
) -> Result<SegmentSummary> {
    let input = input.map(Path::to_path_buf).unwrap_or_else(|| default_input(cfg));
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_root.join("rois"));
    let segmenter = Segmenter::new(cfg, method, weights)?;
    let images = collect_images(&input)?;
    let base = if input.is_file() { input.parent().unwrap_or(Path::new("")) } else { input.as_path() };

    let results: Vec<Result<Outcome>> = images
        .par_iter()
        .map(|path| {
            let img = load_image(path)?;
            let Some(rois) = segmenter.rois(&img).map_err(|e| e.at(path))? else {
                return Ok(Outcome::NoMarkers);
            };
            let rel = path.strip_prefix(base).unwrap_or(path);
            let dir = out.join(rel.parent().unwrap_or(Path::new("")));
            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
            let mut files = Vec::with_capacity(rois.len());
            for roi in rois {
                let file = dir.join(format!("{stem}_{:03}.png", roi.label));
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                encode_image(&roi.crop, &file).map_err(|e| CliError::from(e).at(path))?;
                let sidecar = RoiSidecar {
                    source: path.clone(),
                    label: roi.label,
                    bbox: roi.bbox,
                    area: roi.area,
                    method,
                };
                write_file(&file.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
                files.push(file);
            }
            Ok(Outcome::Rois(files))
        })
        .collect();

    let mut summary = SegmentSummary {
        images: images.len(),
        ..Default::default()
    };
    for (path, r) in images.iter().zip(results) {
        match r {
            Ok(Outcome::Rois(files)) => summary.roi_files.extend(files),
            Ok(Outcome::NoMarkers) => {
                log::warn!("{}: no markers found, skipped", path.display());
                summary.no_markers.push(path.clone());
            }
            Err(e) => {
                log::error!("{e}");
                summary.failures.push(ItemFailure {
                    path: path.clone(),
                    message: e.to_string(),
                });
            }
        }
    }
    write_file(&out.join("segment_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    log::info!(
        "{} image(s): {} ROI(s), {} without markers, {} failure(s)",
        summary.images,
        summary.roi_files.len(),
        summary.no_markers.len(),
        summary.failures.len()
    );
    Ok(summary)
}
