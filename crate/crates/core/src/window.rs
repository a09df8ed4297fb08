use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ChannelKey, Series};

/// Multichannel recording on a single shared time base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub sample_rate: f64,
    pub timestamps: Vec<i64>,
    pub node_count: usize,
    pub channel_names: Vec<String>,
    /// `data[(node * channels + channel) * len + t]`
    data: Vec<f64>,
}

impl Recording {
    pub fn new(
        sample_rate: f64,
        timestamps: Vec<i64>,
        node_count: usize,
        channel_names: Vec<String>,
        data: Vec<f64>,
    ) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::domain(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        let expected = node_count * channel_names.len() * timestamps.len();
        if data.len() != expected {
            return Err(Error::domain(format!(
                "recording data has {} values, expected {expected}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("recording value {i} is not finite")));
        }
        Ok(Self {
            sample_rate,
            timestamps,
            node_count,
            channel_names,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn channel_count(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel(&self, node: usize, channel: usize) -> &[f64] {
        let t = self.len();
        let start = (node * self.channel_count() + channel) * t;
        &self.data[start..start + t]
    }

    /// Put every `(sensor, channel)` series on the time base of the densest one.
    ///
    /// Slower channels are forward-filled: each reference tick takes the latest
    /// sample at or before it (the first sample before the series starts).
    pub fn align(
        series: &BTreeMap<ChannelKey, Series>,
        node_count: usize,
        channel_names: &[String],
        sample_rate: f64,
    ) -> Result<Self> {
        let mut ordered = Vec::with_capacity(node_count * channel_names.len());
        for node in 0..node_count {
            for name in channel_names {
                let key = ChannelKey {
                    sensor: node,
                    channel: name.clone(),
                };
                let s = series.get(&key).ok_or_else(|| {
                    Error::Schema(format!("no data for sensor {node} channel `{name}`"))
                })?;
                ordered.push(s);
            }
        }
        let reference = ordered
            .iter()
            .max_by_key(|s| s.len())
            .map(|s| s.timestamps.clone())
            .unwrap_or_default();
        let mut data = Vec::with_capacity(ordered.len() * reference.len());
        for s in ordered {
            if s.timestamps == reference {
                data.extend_from_slice(&s.values);
                continue;
            }
            if s.is_empty() {
                return Err(Error::Data("cannot align an empty channel".into()));
            }
            let mut k = 0;
            for &t in &reference {
                while k + 1 < s.len() && s.timestamps[k + 1] <= t {
                    k += 1;
                }
                data.push(s.values[k]);
            }
        }
        Self::new(
            sample_rate,
            reference,
            node_count,
            channel_names.to_vec(),
            data,
        )
    }
}

/// A fixed-length slice of a recording, zero-padded at the end when it runs
/// past the last sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalWindow {
    pub start_timestamp: i64,
    pub sample_rate: f64,
    pub node_count: usize,
    pub channel_count: usize,
    pub length: usize,
    pub pad_count: usize,
    /// `values[(node * channel_count + channel) * length + t]`
    pub values: Vec<f64>,
}

impl SignalWindow {
    pub fn channel(&self, node: usize, channel: usize) -> &[f64] {
        let start = (node * self.channel_count + channel) * self.length;
        &self.values[start..start + self.length]
    }

    pub fn channel_mut(&mut self, node: usize, channel: usize) -> &mut [f64] {
        let start = (node * self.channel_count + channel) * self.length;
        &mut self.values[start..start + self.length]
    }

    /// Number of real (non-padding) samples.
    pub fn valid_len(&self) -> usize {
        self.length - self.pad_count
    }
}

/// Cut a recording into windows of `l` samples every `stride` samples.
///
/// Produces `ceil(T / stride)` windows; the tail windows are zero-padded.
pub fn window_and_pad(rec: &Recording, l: usize, stride: usize) -> Result<Vec<SignalWindow>> {
    if l == 0 {
        return Err(Error::domain("window length must be at least 1"));
    }
    if stride == 0 {
        return Err(Error::domain("stride must be at least 1"));
    }
    let total = rec.len();
    let c = rec.channel_count();
    let mut out = Vec::with_capacity(total.div_ceil(stride));
    let mut start = 0;
    while start < total {
        let valid = l.min(total - start);
        let mut values = vec![0.0; rec.node_count * c * l];
        for node in 0..rec.node_count {
            for ch in 0..c {
                let src = &rec.channel(node, ch)[start..start + valid];
                let dst = (node * c + ch) * l;
                values[dst..dst + valid].copy_from_slice(src);
            }
        }
        out.push(SignalWindow {
            start_timestamp: rec.timestamps[start],
            sample_rate: rec.sample_rate,
            node_count: rec.node_count,
            channel_count: c,
            length: l,
            pad_count: l - valid,
            values,
        });
        start += stride;
    }
    Ok(out)
}
