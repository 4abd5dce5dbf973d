use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hemoforge_core::augment::AugmentationConfig;
use hemoforge_core::imaging::ClaheParams;
use hemoforge_core::model::{build_unet_sized, DropoutRates, LossKind, TrainConfig};
use hemoforge_core::watershed::WatershedConfig;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub input_root: PathBuf,
    pub output_root: PathBuf,
    /// Preprocessing target as `[width, height]`.
    #[serde(default = "default_resize")]
    pub resize: [usize; 2],
    #[serde(default)]
    pub clahe: ClaheParams,
    /// Online augmentation for classifier training; `null` disables it.
    #[serde(default = "default_augmentation")]
    pub augmentation: Option<AugmentationConfig>,
    #[serde(default)]
    pub watershed: WatershedConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub unet: UnetConfig,
    #[serde(default)]
    pub kfold: KFoldConfig,
}

fn default_augmentation() -> Option<AugmentationConfig> {
    Some(AugmentationConfig::default())
}

fn default_resize() -> [usize; 2] {
    [224, 224]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub training: TrainConfig,
    pub dropout: DropoutRates,
    /// Cells classified below this confidence are counted as uncertain.
    pub confidence_floor: f32,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            training: TrainConfig::default(),
            dropout: DropoutRates::default(),
            confidence_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnetConfig {
    /// `width_mult` inside selects the channel multiplier.
    pub training: TrainConfig,
    pub input_size: usize,
    pub threshold: f32,
    /// Share of images held out for pixel-metric evaluation.
    pub test_fraction: f64,
}

impl Default for UnetConfig {
    fn default() -> Self {
        Self {
            training: TrainConfig {
                loss: LossKind::Bce,
                epochs: 15,
                batch_size: 8,
                ..TrainConfig::default()
            },
            input_size: 256,
            threshold: 0.5,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KFoldConfig {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for KFoldConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            stratified: true,
        }
    }
}

impl PipelineConfig {
    /// Minimal config with every section at its default.
    pub fn new(input_root: impl Into<PathBuf>, output_root: impl Into<PathBuf>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            input_root: input_root.into(),
            output_root: output_root.into(),
            resize: default_resize(),
            clahe: ClaheParams::default(),
            augmentation: default_augmentation(),
            watershed: WatershedConfig::default(),
            classifier: ClassifierConfig::default(),
            unet: UnetConfig::default(),
            kfold: KFoldConfig::default(),
        }
    }

    /// Parses and validates a config file. Relative roots resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.input_root, &mut cfg.output_root] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.resize.contains(&0) {
            return bad("resize dimensions must be positive".into());
        }
        self.clahe.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(a) = &self.augmentation {
            a.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.watershed.markers.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let c = &self.classifier;
        c.training.validate().map_err(|e| CliError::Config(format!("classifier: {e}")))?;
        if c.training.loss != LossKind::Cce {
            return bad("classifier.training.loss must be \"cce\"".into());
        }
        if c.training.augmentation.is_some() {
            return bad("set augmentation at the top level, not inside classifier.training".into());
        }
        for r in [c.dropout.conv, c.dropout.dense] {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("dropout rate {r} outside [0, 1)"));
            }
        }
        if !c.confidence_floor.is_finite() {
            return bad("confidence_floor must be finite".into());
        }

        let u = &self.unet;
        u.training.validate().map_err(|e| CliError::Config(format!("unet: {e}")))?;
        if u.training.loss != LossKind::Bce {
            return bad("unet.training.loss must be \"bce\"".into());
        }
        build_unet_sized(u.training.width_mult, 16).map_err(|e| CliError::Config(format!("unet: {e}")))?;
        if u.input_size == 0 || u.input_size % 16 != 0 {
            return bad(format!("unet.input_size {} must be a positive multiple of 16", u.input_size));
        }
        if !(0.0..=1.0).contains(&u.threshold) {
            return bad("unet.threshold must lie in [0, 1]".into());
        }
        if !(u.test_fraction > 0.0 && u.test_fraction < 1.0) {
            return bad("unet.test_fraction must lie in (0, 1)".into());
        }
        if self.kfold.k < 2 {
            return bad(format!("kfold.k must be at least 2, got {}", self.kfold.k));
        }
        Ok(())
    }

    /// Classifier training settings with the top-level augmentation applied.
    pub fn classifier_training(&self) -> TrainConfig {
        TrainConfig {
            augmentation: self.augmentation.clone(),
            ..self.classifier.training.clone()
        }
    }
}
