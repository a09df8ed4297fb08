use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::window::SignalWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

/// Window indices per split. Anomalous windows only ever land in `test`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub labels: Vec<bool>,
}

impl DatasetSplit {
    /// Chronological split: the first normal windows train, the next validate,
    /// the remaining normal windows and every anomalous window are test data.
    pub fn assign(labels: &[bool], ratios: [f64; 3]) -> Result<Self> {
        validate_ratios(ratios)?;
        let normal: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
        if normal.is_empty() {
            return Err(Error::Config(
                "no normal windows available for training".into(),
            ));
        }
        let n = normal.len() as f64;
        let n_train = ((ratios[0] * n).round() as usize).clamp(1, normal.len());
        let n_val = ((ratios[1] * n).round() as usize).min(normal.len() - n_train);
        let train = normal[..n_train].to_vec();
        let validation = normal[n_train..n_train + n_val].to_vec();
        let mut test: Vec<usize> = normal[n_train + n_val..].to_vec();
        test.extend((0..labels.len()).filter(|&i| labels[i]));
        test.sort_unstable();
        Ok(Self {
            train,
            validation,
            test,
            labels: labels.to_vec(),
        })
    }

    /// Role of every window, in window order.
    pub fn roles(&self) -> Vec<SplitRole> {
        let mut roles = vec![SplitRole::Test; self.labels.len()];
        for &i in &self.train {
            roles[i] = SplitRole::Train;
        }
        for &i in &self.validation {
            roles[i] = SplitRole::Validation;
        }
        roles
    }

    /// Rebuild a split from stored roles, refusing anomalous training windows.
    pub fn from_roles(roles: &[SplitRole], labels: &[bool]) -> Result<Self> {
        if roles.len() != labels.len() {
            return Err(Error::Config(format!(
                "{} split roles for {} labels",
                roles.len(),
                labels.len()
            )));
        }
        let mut split = Self {
            train: vec![],
            validation: vec![],
            test: vec![],
            labels: labels.to_vec(),
        };
        for (i, r) in roles.iter().enumerate() {
            match r {
                SplitRole::Train if labels[i] => {
                    return Err(Error::Config(format!(
                        "window {i} is anomalous but assigned to training"
                    )))
                }
                SplitRole::Train => split.train.push(i),
                SplitRole::Validation => split.validation.push(i),
                SplitRole::Test => split.test.push(i),
            }
        }
        if split.train.is_empty() {
            return Err(Error::Config("training split is empty".into()));
        }
        Ok(split)
    }
}

fn validate_ratios(r: [f64; 3]) -> Result<()> {
    if r.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!(
            "split ratios {r:?} must be non-negative and sum to 1"
        )));
    }
    Ok(())
}

/// Per `(node, channel)` z-score parameters fitted on training windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub node_count: usize,
    pub channel_count: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    /// Population statistics over the unpadded samples of `windows`.
    pub fn fit<'a>(windows: impl IntoIterator<Item = &'a SignalWindow> + Clone) -> Result<Self> {
        let first = windows
            .clone()
            .into_iter()
            .next()
            .ok_or_else(|| Error::Config("cannot fit normalization on zero windows".into()))?;
        let (n, c) = (first.node_count, first.channel_count);
        let slots = n * c;
        let mut count = 0usize;
        let mut sum = vec![0.0; slots];
        for w in windows.clone() {
            if w.node_count != n || w.channel_count != c {
                return Err(Error::domain("windows have inconsistent shapes"));
            }
            count += w.valid_len();
            for (s, acc) in sum.iter_mut().enumerate() {
                *acc += w.channel(s / c, s % c)[..w.valid_len()].iter().sum::<f64>();
            }
        }
        if count == 0 {
            return Err(Error::Config("training windows contain no samples".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut ss = vec![0.0; slots];
        for w in windows {
            for s in 0..slots {
                ss[s] += w.channel(s / c, s % c)[..w.valid_len()]
                    .iter()
                    .map(|v| (v - mean[s]).powi(2))
                    .sum::<f64>();
            }
        }
        let std = ss.iter().map(|v| (v / count as f64).sqrt()).collect();
        Ok(Self {
            node_count: n,
            channel_count: c,
            mean,
            std,
        })
    }

    /// Z-score the unpadded samples; channels with zero spread are left untouched.
    pub fn apply(&self, w: &SignalWindow) -> Result<SignalWindow> {
        if w.node_count != self.node_count || w.channel_count != self.channel_count {
            return Err(Error::domain("window shape does not match normalization"));
        }
        let mut out = w.clone();
        let valid = w.valid_len();
        for node in 0..self.node_count {
            for ch in 0..self.channel_count {
                let s = node * self.channel_count + ch;
                if self.std[s] == 0.0 {
                    continue;
                }
                for v in &mut out.channel_mut(node, ch)[..valid] {
                    *v = (*v - self.mean[s]) / self.std[s];
                }
            }
        }
        Ok(out)
    }
}

/// Split, fit normalization on the training windows and transform every window.
pub fn split_and_normalize(
    windows: &[SignalWindow],
    labels: &[bool],
    ratios: [f64; 3],
) -> Result<(DatasetSplit, Normalization, Vec<SignalWindow>)> {
    if windows.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} windows but {} labels",
            windows.len(),
            labels.len()
        )));
    }
    let split = DatasetSplit::assign(labels, ratios)?;
    let (norm, normalized) = normalize_with_split(windows, &split)?;
    Ok((split, norm, normalized))
}

pub fn normalize_with_split(
    windows: &[SignalWindow],
    split: &DatasetSplit,
) -> Result<(Normalization, Vec<SignalWindow>)> {
    let norm = Normalization::fit(split.train.iter().map(|&i| &windows[i]))?;
    let normalized = windows
        .iter()
        .map(|w| norm.apply(w))
        .collect::<Result<_>>()?;
    Ok((norm, normalized))
}

/// Width of the per-node feature vector for windows of `l` samples and `c` channels.
pub fn feature_dim(l: usize, c: usize) -> usize {
    l + 4 * c.saturating_sub(1)
}

/// Node features of one window: the first channel's samples, then
/// mean/std/min/max of each auxiliary channel.
pub fn node_features(w: &SignalWindow) -> RMatrix {
    let d = feature_dim(w.length, w.channel_count);
    let valid = w.valid_len().max(1);
    let mut x = RMatrix::zeros(w.node_count, d);
    for node in 0..w.node_count {
        for (t, v) in w.channel(node, 0).iter().enumerate() {
            x[(node, t)] = *v;
        }
        for ch in 1..w.channel_count {
            let s = &w.channel(node, ch)[..valid.min(w.length)];
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            let std = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
            let min = s.iter().copied().fold(f64::INFINITY, f64::min);
            let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let base = w.length + 4 * (ch - 1);
            x[(node, base)] = mean;
            x[(node, base + 1)] = std;
            x[(node, base + 2)] = min;
            x[(node, base + 3)] = max;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(vals: &[f64]) -> SignalWindow {
        SignalWindow {
            start_timestamp: 0,
            sample_rate: 1.0,
            node_count: 1,
            channel_count: 1,
            length: vals.len(),
            pad_count: 0,
            values: vals.to_vec(),
        }
    }

    #[test]
    fn eighty_ten_ten() {
        let s = DatasetSplit::assign(&[false; 10], [0.8, 0.1, 0.1]).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn anomalies_go_to_test() {
        let labels = [false, true, false, false, true];
        let s = DatasetSplit::assign(&labels, [0.5, 0.0, 0.5]).unwrap();
        assert!(s.train.iter().all(|&i| !labels[i]));
        assert!(s.test.contains(&1) && s.test.contains(&4));
    }

    #[test]
    fn all_anomalous_is_config_error() {
        assert!(matches!(
            DatasetSplit::assign(&[true; 3], [0.8, 0.1, 0.1]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn roles_round_trip_and_refuse_anomalous_training() {
        let labels = [false, false, true];
        let s = DatasetSplit::assign(&labels, [0.5, 0.5, 0.0]).unwrap();
        assert_eq!(DatasetSplit::from_roles(&s.roles(), &labels).unwrap(), s);
        let bad = [SplitRole::Train, SplitRole::Test, SplitRole::Train];
        assert!(DatasetSplit::from_roles(&bad, &labels).is_err());
    }

    #[test]
    fn constant_channel_unchanged() {
        let ws = vec![window(&[3.0; 4]), window(&[3.0; 4])];
        let (_, _, out) = split_and_normalize(&ws, &[false, false], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(out, ws);
    }

    #[test]
    fn z_scores_match_hand_computation() {
        // mean 2.5, population std sqrt(1.25)
        let ws = vec![window(&[1.0, 2.0]), window(&[3.0, 4.0])];
        let (_, norm, out) = split_and_normalize(&ws, &[false, false], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(norm.mean, vec![2.5]);
        let sd = 1.25f64.sqrt();
        assert!((out[0].values[0] - (1.0 - 2.5) / sd).abs() < 1e-15);
        assert!((out[1].values[1] - (4.0 - 2.5) / sd).abs() < 1e-15);
    }

    #[test]
    fn padding_is_excluded_and_kept_zero() {
        let mut w = window(&[2.0, 4.0, 0.0]);
        w.pad_count = 1;
        let norm = Normalization::fit([&w]).unwrap();
        assert_eq!(norm.mean, vec![3.0]);
        assert_eq!(norm.apply(&w).unwrap().values, vec![-1.0, 1.0, 0.0]);
    }

    #[test]
    fn features_include_auxiliary_summaries() {
        let w = SignalWindow {
            start_timestamp: 0,
            sample_rate: 1.0,
            node_count: 1,
            channel_count: 2,
            length: 2,
            pad_count: 0,
            values: vec![1.0, 2.0, 10.0, 20.0],
        };
        let x = node_features(&w);
        assert_eq!(x.ncols(), feature_dim(2, 2));
        assert_eq!(
            x.row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 2.0, 15.0, 5.0, 10.0, 20.0]
        );
    }
}
