//! Dataset manifests: which files make up a recording, how it is windowed,
//! and the label and split of every window.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetSplit, SplitRole};
use crate::error::{Error, Result};
use crate::graph::SensorGraph;
use crate::ingest::{ingest_binary_stream, ingest_csv, ChannelKey};
use crate::window::{window_and_pad, Recording, SignalWindow};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Binary,
    Csv,
}

/// One data file. Binary files carry a single channel, named here; CSV files
/// name sensor and channel per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    pub sample_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub format: DataFormat,
    pub sample_rate: f64,
    pub node_count: usize,
    /// Channel names; the first feeds the spectral estimate.
    pub channels: Vec<String>,
    pub node_masses: Vec<f64>,
    /// Spring stiffness of the chain model (N/m).
    pub stiffness: f64,
    pub files: Vec<FileEntry>,
    pub window_length: usize,
    pub stride: usize,
    pub labels: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Vec<SplitRole>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_hash: Option<String>,
    #[serde(default)]
    pub version: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("manifest {}: {e}", path.display())))?;
        m.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, base))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported manifest format_version {}, expected {FORMAT_VERSION}",
                self.format_version
            )));
        }
        if self.channels.is_empty() {
            return Err(Error::Schema("manifest lists no channels".into()));
        }
        if self.node_masses.len() != self.node_count {
            return Err(Error::Schema(format!(
                "{} node masses for {} nodes",
                self.node_masses.len(),
                self.node_count
            )));
        }
        if let Some(split) = &self.split {
            if split.len() != self.labels.len() {
                return Err(Error::Schema(format!(
                    "{} split entries for {} labels",
                    split.len(),
                    self.labels.len()
                )));
            }
        }
        if self.window_length == 0 || self.stride == 0 {
            return Err(Error::Schema(
                "window_length and stride must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn graph(&self) -> Result<SensorGraph> {
        SensorGraph::chain(self.node_masses.clone(), self.channels.clone())
    }

    pub fn load_recording(&self, base: &Path) -> Result<Recording> {
        let mut series = BTreeMap::new();
        for f in &self.files {
            let path = base.join(&f.path);
            match self.format {
                DataFormat::Binary => {
                    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                    let s = ingest_binary_stream(&bytes)?;
                    let (Some(sensor), Some(channel)) = (f.sensor, f.channel.clone()) else {
                        return Err(Error::Schema(format!(
                            "binary file {} needs sensor and channel",
                            f.path
                        )));
                    };
                    series.insert(ChannelKey { sensor, channel }, s);
                }
                DataFormat::Csv => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    series.extend(ingest_csv(&text)?);
                }
            }
        }
        Recording::align(&series, self.node_count, &self.channels, self.sample_rate)
    }

    /// Windows of the recording, checked against the label count.
    pub fn windows(&self, rec: &Recording) -> Result<Vec<SignalWindow>> {
        let w = window_and_pad(rec, self.window_length, self.stride)?;
        if w.len() != self.labels.len() {
            return Err(Error::Schema(format!(
                "recording yields {} windows but manifest has {} labels",
                w.len(),
                self.labels.len()
            )));
        }
        Ok(w)
    }

    /// Stored split if present, otherwise a chronological split by `ratios`.
    pub fn split(&self, ratios: [f64; 3]) -> Result<DatasetSplit> {
        match &self.split {
            Some(roles) => DatasetSplit::from_roles(roles, &self.labels),
            None => DatasetSplit::assign(&self.labels, ratios),
        }
    }
}
