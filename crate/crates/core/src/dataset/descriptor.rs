use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::formats::Format;

/// Per-dataset hyperparameters, read from a TOML file in `configs/`.
///
/// A relative `data_path` is resolved against the directory holding the
/// config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub name: String,
    pub data_path: PathBuf,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps_override: Option<f64>,
    pub window_length: usize,
    pub window_stride: usize,
    pub normalize: bool,
    /// First-level subdirectory name -> action label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_rule: Option<BTreeMap<String, String>>,
    pub val_fraction: f64,
    pub split_seed: u64,
}

impl DatasetDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 {
            return Err(Error::invalid(format!("window_length must be >= 2, got {}", self.window_length)));
        }
        if self.window_stride < 1 {
            return Err(Error::invalid("window_stride must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::invalid(format!("val_fraction must lie in [0, 1), got {}", self.val_fraction)));
        }
        if let Some(fps) = self.fps_override {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(Error::invalid(format!("fps_override must be positive, got {fps}")));
            }
        }
        Ok(())
    }

    /// Parses a config document without touching the filesystem.
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, ParseError> {
        let de = toml::Deserializer::new(text);
        let d: DatasetDescriptor = serde_path_to_error::deserialize(de).map_err(ParseError::from_toml)?;
        d.validate().map_err(|e| ParseError::new(e.to_string()))?;
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut d = Self::from_toml_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        if d.data_path.is_relative() {
            if let Some(dir) = path.parent() {
                d.data_path = dir.join(&d.data_path);
            }
        }
        Ok(d)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn frame_time_override(&self) -> Option<f64> {
        self.fps_override.map(|f| 1.0 / f)
    }
}
