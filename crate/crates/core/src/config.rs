//! Run configuration shared by the command-line tool, optionally read from
//! a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmark::MethodParams;
use crate::error::{Error, Result};
use crate::estimation::MultiParams;
use crate::preprocess::LevelsTable;

/// Environment variable naming the default camera-levels file.
pub const LEVELS_ENV: &str = "GI_CAMERA_LEVELS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// GI parameters, global top percentage, baseline parameters.
    pub method: MethodParams,
    pub multi: MultiParams,
    /// Camera black/saturation table; the built-in table when unset.
    pub camera_levels: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: MethodParams::default(),
            multi: MultiParams::default(),
            camera_levels: None,
            output_dir: PathBuf::from("."),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        self.multi.validate()
    }

    /// Levels from the configured file, else from `GI_CAMERA_LEVELS`, else
    /// the built-in table.
    pub fn levels(&self) -> Result<LevelsTable> {
        if let Some(path) = &self.camera_levels {
            return LevelsTable::load(path);
        }
        match std::env::var_os(LEVELS_ENV) {
            Some(path) if !path.is_empty() => LevelsTable::load(Path::new(&path)),
            _ => Ok(LevelsTable::builtin()),
        }
    }
}
