//! Batch front end for the blood-smear pipeline: dataset ingestion, JSON
//! configuration, the preprocess / segment / crossval / train / classify /
//! count / report commands, and report and curve emission.
//!
//! Exit codes of the binary: 0 success, 1 the run completed but some inputs
//! failed, 2 configuration or I/O error.

pub mod classify;
pub mod config;
pub mod crossval;
pub mod dataset;
pub mod error;
pub mod preprocess;
pub mod report;
pub mod segment;
pub mod training;

pub use classify::{cmd_classify, cmd_classify_to, cmd_count, ClassificationOutput, ClassifyOptions};
pub use config::PipelineConfig;
pub use crossval::{cmd_crossval, CrossvalOutput};
pub use dataset::{ingest, DatasetIndex};
pub use error::{CliError, ItemFailure};
pub use preprocess::cmd_preprocess;
pub use report::{Report, SegmentationReport};
pub use segment::{cmd_segment, Method};
pub use training::{cmd_train_classifier, cmd_train_unet};

/// Reads a report written by `crossval` and renders its fold table.
pub fn cmd_report(path: &std::path::Path) -> error::Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let report: Report = serde_json::from_str(&text)?;
    let mut s = report.table()?;
    if !report.classes.is_empty() {
        s += &format!("\nClasses: {}\n", report.classes.join(", "));
    }
    Ok(s)
}
