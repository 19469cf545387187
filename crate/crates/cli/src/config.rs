//! Configuration resolution: command-line flag > config-file value >
//! built-in default.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

/// Optional values readable from a JSON config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub pcs: Option<usize>,
    pub l1_ratio: Option<f64>,
    pub ridge: Option<f64>,
    pub sigma_sq: Option<f64>,
    pub threshold_quantile: Option<f64>,
    pub max_outer_iter: Option<usize>,
    pub seed: Option<u64>,
    pub inlier: Option<String>,
    pub outlier: Option<String>,
    pub label_col: Option<String>,
    pub train_count: Option<usize>,
    pub test_inliers: Option<usize>,
    pub test_outliers: Option<usize>,
    pub grid: Option<Vec<f64>>,
    pub trials: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

/// Flag beats file beats default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}
