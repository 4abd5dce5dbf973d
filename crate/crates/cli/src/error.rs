use std::path::PathBuf;

use hemoforge_core::eval::EvalError;
use hemoforge_core::imaging::ImageError;
use hemoforge_core::model::ModelError;
use hemoforge_core::watershed::WatershedError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} contains no class directories")]
    NoClassDirectories(PathBuf),
    #[error("no images found under {0}")]
    EmptyDataset(PathBuf),
    #[error("weights file {0} does not exist")]
    MissingWeights(PathBuf),
    #[error("{path}: {source}")]
    Item { path: PathBuf, source: Box<CliError> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Watershed(#[from] WatershedError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at(self, path: impl Into<PathBuf>) -> Self {
        CliError::Item {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

/// One input that failed while the rest of a batch went on.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ItemFailure {
    pub path: PathBuf,
    pub message: String,
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn write_file(path: &std::path::Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
