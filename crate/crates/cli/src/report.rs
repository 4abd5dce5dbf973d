use serde::{Deserialize, Serialize};
use serde_json::Value;

use hemoforge_core::eval::{aggregate_folds, render_fold_table, ClassMetrics, ConfusionMatrix, MetricSet, PixelMetrics, RocReport};

use crate::config::PipelineConfig;
use crate::error::Result;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    /// `None` for classes absent from, or filling, the evaluated fold.
    pub per_class_auc: Vec<Option<f64>>,
    pub micro_auc: Option<f64>,
    pub macro_auc: Option<f64>,
}

impl From<&RocReport> for RocSummary {
    fn from(r: &RocReport) -> Self {
        Self {
            per_class_auc: r.per_class.iter().map(|c| c.as_ref().map(|c| c.auc)).collect(),
            micro_auc: r.micro.as_ref().map(|c| c.auc),
            macro_auc: r.macro_auc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Overall accuracy with macro precision, recall and F1.
    pub metrics: MetricSet,
    pub class_metrics: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub fold_seconds: Vec<f64>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub config: PipelineConfig,
    pub classes: Vec<String>,
    pub folds: Vec<FoldReport>,
    pub average: MetricSet,
    pub confusion: Vec<ConfusionMatrix>,
    pub roc_summary: Vec<RocSummary>,
    /// Wall-clock timings; dropped from the canonical form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime: Option<Runtime>,
}

impl Report {
    /// Checks that the average row equals the aggregate of the fold rows.
    pub fn average_is_consistent(&self) -> bool {
        let folds: Vec<MetricSet> = self.folds.iter().map(|f| f.metrics).collect();
        aggregate_folds(&folds).map(|a| a == self.average).unwrap_or(false)
    }

    pub fn table(&self) -> Result<String> {
        let folds: Vec<MetricSet> = self.folds.iter().map(|f| f.metrics).collect();
        Ok(render_fold_table(&folds)?)
    }

    /// JSON with floats at 6 significant digits; `canonical` drops the runtime block.
    pub fn to_json(&self, canonical: bool) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if canonical {
            if let Value::Object(map) = &mut v {
                map.remove("runtime");
            }
        }
        round_floats(&mut v);
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }
}

/// Pixel metrics of a held-out segmentation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub version: u32,
    pub config: PipelineConfig,
    pub test_images: Vec<String>,
    pub per_image: Vec<PixelMetrics>,
    pub mean_iou: f64,
    pub mean_dice: f64,
    /// Metrics over all held-out pixels pooled together.
    pub pooled: PixelMetrics,
}

impl SegmentationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        round_floats(&mut v);
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }
}

/// Rounds `x` to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = sig6(n.as_f64().expect("f64 number"));
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}
