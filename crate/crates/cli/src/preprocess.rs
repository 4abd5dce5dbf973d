use std::path::{Path, PathBuf};

use rayon::prelude::*;

use hemoforge_core::imaging::{clahe, encode_image, resize_bilinear};

use crate::config::PipelineConfig;
use crate::dataset::{ingest, load_image};
use crate::error::{CliError, ItemFailure, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessSummary {
    pub written: Vec<PathBuf>,
    pub failures: Vec<ItemFailure>,
}

/// `<out>/<class>/<stem>.png` for every input image.
pub fn preprocess_destination(out: &Path, class: &str, src: &Path) -> PathBuf {
    out.join(class).join(src.file_stem().unwrap_or_default()).with_extension("png")
}

/// Resize to the configured size, apply CLAHE per channel and write a PNG
/// mirror of the class tree.
pub fn cmd_preprocess(cfg: &PipelineConfig, input: Option<&Path>, out: Option<&Path>) -> Result<PreprocessSummary> {
    let index = ingest(input.unwrap_or(&cfg.input_root))?;
    let default_out = cfg.output_root.join("preprocessed");
    let out = out.unwrap_or(&default_out);
    let [w, h] = cfg.resize;
    let results: Vec<Result<PathBuf>> = index
        .entries
        .par_iter()
        .map(|e| {
            let dest = preprocess_destination(out, &index.classes[e.class_id], &e.path);
            let run = || -> Result<()> {
                let img = load_image(&e.path)?.to_byte();
                let img = clahe(&resize_bilinear(&img, w, h)?, &cfg.clahe)?;
                if let Some(dir) = dest.parent() {
                    std::fs::create_dir_all(dir).map_err(|err| CliError::io(dir, err))?;
                }
                encode_image(&img, &dest)?;
                Ok(())
            };
            run().map(|_| dest).map_err(|err| match err {
                CliError::Item { .. } => err,
                other => other.at(&e.path),
            })
        })
        .collect();
    let mut summary = PreprocessSummary {
        written: Vec::new(),
        failures: Vec::new(),
    };
    for (e, r) in index.entries.iter().zip(results) {
        match r {
            Ok(p) => summary.written.push(p),
            Err(err) => {
                log::error!("{err}");
                summary.failures.push(ItemFailure {
                    path: e.path.clone(),
                    message: err.to_string(),
                });
            }
        }
    }
    log::info!("preprocessed {} image(s), {} failure(s)", summary.written.len(), summary.failures.len());
    Ok(summary)
}
