//! JSON checkpoints holding the model, its training state and preprocessing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::TrainState;
use super::AutoencoderParams;
use crate::config::RunConfig;
use crate::dataset::Normalization;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub checkpoint_version: u32,
    pub library_version: String,
    pub config: RunConfig,
    pub config_hash: String,
    /// Hash of the dataset manifest the model was trained on.
    pub dataset_hash: String,
    pub normalization: Normalization,
    /// Parameters after the last completed epoch.
    pub params: AutoencoderParams,
    /// Parameters of the best validation epoch.
    pub best: AutoencoderParams,
    pub state: TrainState,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.checkpoint_version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                c.checkpoint_version
            )));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
