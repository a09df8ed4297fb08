use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Fast,
    Laplace,
    Cheb,
}

impl std::str::FromStr for LayerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Self::Fast),
            "laplace" => Ok(Self::Laplace),
            "cheb" => Ok(Self::Cheb),
            other => Err(Error::Config(format!("unknown layer kind `{other}`"))),
        }
    }
}

/// How the cross-PSD is weighted with the frequency response before the SVD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `S · Hᵀ` per frequency.
    MatrixProduct,
    /// Entry-wise `S ⊙ H`.
    Elementwise,
    /// `H · S · Hᴴ`, the textbook output-spectrum form.
    Congruence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    L1,
    Mahalanobis,
}

impl std::str::FromStr for ThresholdKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Self::L1),
            "mahalanobis" => Ok(Self::Mahalanobis),
            other => Err(Error::Config(format!("unknown threshold kind `{other}`"))),
        }
    }
}

/// Training and evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub window_length: usize,
    pub stride: usize,
    pub batch_size: usize,
    /// Encoder layers; the decoder mirrors them.
    pub layer_count: usize,
    pub hidden_dim: usize,
    pub bottleneck: usize,
    /// Chebyshev filter size `K`: polynomial terms `T_0..T_{K−1}`.
    pub cheb_order: usize,
    pub retained_modes: usize,
    pub damping_ratio: f64,
    pub percentile: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub layer: LayerKind,
    pub weighting: Weighting,
    pub threshold: ThresholdKind,
    /// Train / validation / test fractions of the normal windows.
    pub split: [f64; 3],
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            window_length: 5,
            stride: 1,
            batch_size: 256,
            layer_count: 3,
            hidden_dim: 16,
            bottleneck: 4,
            cheb_order: 5,
            retained_modes: 4,
            damping_ratio: 0.02,
            percentile: 0.95,
            learning_rate: 0.01,
            epochs: 50,
            seed: 0,
            layer: LayerKind::Fast,
            weighting: Weighting::MatrixProduct,
            threshold: ThresholdKind::L1,
            split: [0.7, 0.15, 0.15],
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("`{field}`: {msg}")));
        if self.window_length < 2 {
            return bad(
                "window_length",
                format!("must be at least 2, got {}", self.window_length),
            );
        }
        if self.stride == 0 {
            return bad("stride", "must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1".into());
        }
        if ![1, 3, 5, 10].contains(&self.layer_count) {
            return bad(
                "layer_count",
                format!("must be one of 1, 3, 5, 10, got {}", self.layer_count),
            );
        }
        if ![4, 8, 16].contains(&self.hidden_dim) {
            return bad(
                "hidden_dim",
                format!("must be one of 4, 8, 16, got {}", self.hidden_dim),
            );
        }
        if ![1, 2, 4].contains(&self.bottleneck) {
            return bad(
                "bottleneck",
                format!("must be one of 1, 2, 4, got {}", self.bottleneck),
            );
        }
        if !(2..=8).contains(&self.cheb_order) {
            return bad(
                "cheb_order",
                format!("must be in 2..=8, got {}", self.cheb_order),
            );
        }
        if self.retained_modes == 0 {
            return bad("retained_modes", "must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.damping_ratio) {
            return bad(
                "damping_ratio",
                format!("must be in [0, 1), got {}", self.damping_ratio),
            );
        }
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return bad(
                "percentile",
                format!("must be in (0, 1), got {}", self.percentile),
            );
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad(
                "learning_rate",
                format!(
                    "must be finite and non-negative, got {}",
                    self.learning_rate
                ),
            );
        }
        let s = self.split;
        if s.iter().any(|x| !(x.is_finite() && *x >= 0.0))
            || (s.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("split", format!("{s:?} must be non-negative and sum to 1"));
        }
        if s[0] == 0.0 {
            return bad("split", "training fraction must be positive".into());
        }
        Ok(())
    }

    /// Checks that need the sensor count.
    pub fn validate_for_nodes(&self, n: usize) -> Result<()> {
        self.validate()?;
        if self.retained_modes > n {
            return Err(Error::Config(format!(
                "`retained_modes`: {} exceeds the {n} sensor nodes",
                self.retained_modes
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        canonical_hash(self)
    }
}

/// SHA-256 over the JSON serialization with object keys sorted.
pub fn canonical_hash<T: Serialize>(value: &T) -> String {
    use sha2::{Digest, Sha256};
    // serde_json::Value keeps keys in a BTreeMap, so this is key-order independent.
    let v = serde_json::to_value(value).expect("serializable value");
    let text = serde_json::to_string(&v).expect("serializable value");
    hex::encode(Sha256::digest(text.as_bytes()))
}
