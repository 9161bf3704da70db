//! Pipeline configuration files.
//!
//! A config is a TOML file of flat, dotted keys mirroring
//! [`PipelineConfig`]; missing keys keep their defaults:
//!
//! ```toml
//! gamma = 0.2
//! roi_offset_px = 5
//! neutro.window = 5
//! homomorphic.sigma = 3.2
//! weight_rpe.d_above = 10
//! ```

use std::path::{Path, PathBuf};

use choroidseg_core::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

/// Parses config text. `origin` only labels errors.
pub fn parse_config(text: &str, origin: &Path) -> Result<PipelineConfig, ConfigError> {
    let invalid = |reason: String| ConfigError::Invalid {
        path: origin.to_path_buf(),
        reason,
    };
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| invalid(e.to_string()))?;
    // A partial `weight_choroid` table would otherwise default to RPE mode.
    if let Some(toml::Value::Table(choroid)) = table.get_mut("weight_choroid") {
        choroid
            .entry("mode")
            .or_insert_with(|| toml::Value::String("dark_to_light".into()));
    }
    let cfg: PipelineConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| invalid(e.to_string()))?;
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(cfg)
}

/// Loads a config file, or the defaults when `path` is `None`.
pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig, ConfigError> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}
