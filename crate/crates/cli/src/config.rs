//! Optional TOML config file. Resolution order for every setting:
//! command-line flag, then config file, then built-in default. The config
//! path comes from `--config` or the `CGNP_CONFIG` environment variable.

use std::path::{Path, PathBuf};

use cgnp_core::{Error, Result};
use serde::Deserialize;

pub const CONFIG_ENV: &str = "CGNP_CONFIG";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// Prediction threshold (tweets at which features are frozen).
    pub n: Option<usize>,
    /// Virality threshold for absolute labeling.
    pub m: Option<u64>,
    /// `absolute` or `percentile`.
    pub mode: Option<String>,
    pub percentile_k: Option<f64>,
    /// Fresh-hashtag filter window.
    pub window_hours: Option<i64>,
    pub max_early: Option<u64>,
    pub strict: Option<bool>,
    pub trees: Option<usize>,
    pub folds: Option<usize>,
    pub undersample: Option<f64>,
    pub bins: Option<usize>,
    /// `adopters-time` or `adopters-rt`.
    pub e1: Option<String>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(explicit: Option<&Path>) -> Result<FileConfig> {
        let path: Option<PathBuf> = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(&path)?;
        toml::from_str(&text)
            .map_err(|e| Error::validation(format!("config {}: {e}", path.display())))
    }
}

/// flag > config file > default
pub fn resolve<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
