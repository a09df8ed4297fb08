//! Percentile thresholds on reconstruction errors and the classification metrics.

use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

use crate::config::ThresholdKind;
use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// Relative size of the ridge added to a singular residual covariance.
pub const RIDGE_SCALE: f64 = 1e-6;
/// A Cholesky pivot below this fraction of `trace/dim` marks the covariance as singular.
const SINGULAR_PIVOT: f64 = 1e-10;

/// Empirical `q`-quantile with linear interpolation between order statistics
/// (`h = (N − 1) q`).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("quantile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!(
            "quantile level must be in [0, 1], got {q}"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("quantile input contains NaN"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    Ok(s[lo] + (h - lo as f64) * (s[hi] - s[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub kind: ThresholdKind,
    pub threshold: f64,
    pub percentile: f64,
    /// Residual mean (Mahalanobis only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    /// Residual covariance including any ridge (Mahalanobis only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<RMatrix>,
    /// Lower Cholesky factor of `covariance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cholesky: Option<RMatrix>,
    /// Ridge actually added to the covariance diagonal.
    #[serde(default)]
    pub ridge: f64,
}

impl ThresholdModel {
    /// Anomaly score of one flattened residual vector.
    pub fn score(&self, residual: &[f64]) -> Result<f64> {
        match self.kind {
            ThresholdKind::L1 => Ok(l1_norm(residual)),
            ThresholdKind::Mahalanobis => {
                let (mean, l) = self
                    .mean
                    .as_ref()
                    .zip(self.cholesky.as_ref())
                    .ok_or_else(|| Error::domain("Mahalanobis model is missing its fit"))?;
                mahalanobis(residual, mean, l)
            }
        }
    }

    pub fn scores(&self, residuals: &[Vec<f64>]) -> Result<Vec<f64>> {
        residuals.iter().map(|r| self.score(r)).collect()
    }
}

pub fn l1_norm(residual: &[f64]) -> f64 {
    residual.iter().map(|v| v.abs()).sum()
}

/// Threshold at the `q`-quantile of per-window L1 errors.
pub fn fit_l1(train_errors: &[f64], q: f64) -> Result<ThresholdModel> {
    if train_errors.is_empty() {
        return Err(Error::domain("cannot fit an L1 threshold on zero errors"));
    }
    Ok(ThresholdModel {
        kind: ThresholdKind::L1,
        threshold: quantile(train_errors, q)?,
        percentile: q,
        mean: None,
        covariance: None,
        cholesky: None,
        ridge: 0.0,
    })
}

/// Fit mean and covariance of training residuals and threshold the
/// Mahalanobis distance at its `q`-quantile.
///
/// A ridge of `1e-6 · trace(Σ)/dim` is added only when `Σ` is numerically
/// singular, so a full-rank fit stays exactly affine-invariant.
pub fn fit_mahalanobis(train_residuals: &[Vec<f64>], q: f64) -> Result<ThresholdModel> {
    let n = train_residuals.len();
    if n < 2 {
        return Err(Error::domain(format!(
            "Mahalanobis fit needs at least 2 residual vectors, got {n}"
        )));
    }
    let dim = train_residuals[0].len();
    if dim == 0 || train_residuals.iter().any(|r| r.len() != dim) {
        return Err(Error::domain(
            "residual vectors must be non-empty and of equal length",
        ));
    }
    let mut mean = vec![0.0; dim];
    for r in train_residuals {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = RMatrix::from_fn(n, dim, |i, j| train_residuals[i][j] - mean[j]);
    let mut cov = centered.tr_mul(&centered) / n as f64;
    let scale = cov.trace() / dim as f64;

    let factor = |c: &RMatrix| -> Option<RMatrix> {
        let l = Cholesky::new(c.clone())?.unpack();
        let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v * v));
        (min_pivot > SINGULAR_PIVOT * scale.max(f64::MIN_POSITIVE)).then_some(l)
    };
    let mut ridge = 0.0;
    let l = match factor(&cov) {
        Some(l) => l,
        None => {
            ridge = if scale > 0.0 {
                RIDGE_SCALE * scale
            } else {
                RIDGE_SCALE
            };
            for i in 0..dim {
                cov[(i, i)] += ridge;
            }
            Cholesky::new(cov.clone())
                .ok_or_else(|| Error::domain("residual covariance is not positive semi-definite"))?
                .unpack()
        }
    };
    let distances = train_residuals
        .iter()
        .map(|r| mahalanobis(r, &mean, &l))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdModel {
        kind: ThresholdKind::Mahalanobis,
        threshold: quantile(&distances, q)?,
        percentile: q,
        mean: Some(mean),
        covariance: Some(cov),
        cholesky: Some(l),
        ridge,
    })
}

fn mahalanobis(x: &[f64], mean: &[f64], l: &RMatrix) -> Result<f64> {
    if x.len() != mean.len() {
        return Err(Error::domain(format!(
            "residual has {} entries, model expects {}",
            x.len(),
            mean.len()
        )));
    }
    let d = DVector::from_iterator(x.len(), x.iter().zip(mean).map(|(a, b)| a - b));
    let y = l
        .solve_lower_triangular(&d)
        .ok_or_else(|| Error::domain("singular Cholesky factor"))?;
    Ok(y.norm())
}

/// `score > threshold`, strictly.
pub fn classify(scores: &[f64], model: &ThresholdModel) -> Vec<bool> {
    scores.iter().map(|&s| s > model.threshold).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub auc: f64,
    /// Set when AUC could not be computed from both classes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn metrics(flags: &[bool], truth: &[bool], scores: &[f64]) -> Result<ClassificationMetrics> {
    if flags.len() != truth.len() || scores.len() != truth.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} flags, {} labels, {} scores",
            flags.len(),
            truth.len(),
            scores.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&f, &t) in flags.iter().zip(truth) {
        match (f, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let positives = tp + fn_;
    let negatives = tn + fp;
    let balanced_accuracy = match (positives > 0, negatives > 0) {
        (true, true) => 0.5 * (recall + ratio(tn, negatives)),
        (true, false) => recall,
        (false, true) => ratio(tn, negatives),
        (false, false) => 0.0,
    };
    let (auc, note) = match roc_auc(scores, truth) {
        Some(a) => (a, None),
        None => (
            0.5,
            Some("AUC undefined: only one class present".to_string()),
        ),
    };
    Ok(ClassificationMetrics {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        precision,
        recall,
        f1,
        balanced_accuracy,
        auc,
        note,
    })
}

/// Area under the ROC curve by the trapezoidal rule over all score
/// thresholds; tied scores form one diagonal segment. `None` unless both
/// classes are present.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Option<f64> {
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 || scores.iter().any(|s| s.is_nan()) {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut k = 0;
    while k < idx.len() {
        let (tp0, fp0) = (tp, fp);
        let s = scores[idx[k]];
        while k < idx.len() && scores[idx[k]] == s {
            if truth[idx[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
    }
    Some(area / (pos as f64 * neg as f64))
}

/// Scores, flags and metrics of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub threshold: ThresholdModel,
    pub scores: Vec<f64>,
    pub flags: Vec<bool>,
    pub truth: Vec<bool>,
    pub metrics: ClassificationMetrics,
}

impl AnomalyReport {
    pub fn new(threshold: ThresholdModel, scores: Vec<f64>, truth: Vec<bool>) -> Result<Self> {
        let flags = classify(&scores, &threshold);
        let metrics = metrics(&flags, &truth, &scores)?;
        Ok(Self {
            threshold,
            scores,
            flags,
            truth,
            metrics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_of_one_to_hundred() {
        let e: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((fit_l1(&e, 0.95).unwrap().threshold - 95.05).abs() < 1e-12);
    }

    #[test]
    fn equal_errors() {
        let e = vec![2.5; 10];
        let m = fit_l1(&e, 0.95).unwrap();
        assert_eq!(m.threshold, 2.5);
        assert!(classify(&e, &m).iter().all(|f| !f));
    }

    #[test]
    fn single_error() {
        assert_eq!(fit_l1(&[4.0], 0.95).unwrap().threshold, 4.0);
        assert!(fit_l1(&[], 0.95).is_err());
    }

    #[test]
    fn strict_threshold() {
        let m = fit_l1(&[1.0, 2.0, 3.0], 0.5).unwrap();
        assert_eq!(classify(&[2.0, 2.0 + 1e-12], &m), vec![false, true]);
    }

    #[test]
    fn mahalanobis_basics() {
        let r = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 2.0],
            vec![0.0, -2.0],
        ];
        let m = fit_mahalanobis(&r, 0.95).unwrap();
        assert_eq!(m.ridge, 0.0);
        assert_eq!(m.score(&[0.0, 0.0]).unwrap(), 0.0);
        // var_x = 0.5, var_y = 2
        let d = m.score(&[1.0, 1.0]).unwrap();
        assert!((d - (1.0 / 0.5 + 1.0 / 2.0f64).sqrt()).abs() < 1e-12);
        assert!(fit_mahalanobis(&r[..1], 0.95).is_err());
    }

    #[test]
    fn singular_covariance_gets_ridge() {
        let r = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let m = fit_mahalanobis(&r, 0.95).unwrap();
        assert!(m.ridge > 0.0);
        assert!(m.threshold.is_finite());
    }

    #[test]
    fn perfect_separation() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let truth = [false, false, true, true];
        let flags = [false, false, true, true];
        let m = metrics(&flags, &truth, &scores).unwrap();
        for v in [m.precision, m.recall, m.f1, m.balanced_accuracy, m.auc] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn all_negative_predictions() {
        let m = metrics(&[false; 4], &[false, false, true, true], &[0.0; 4]).unwrap();
        assert_eq!((m.recall, m.f1, m.balanced_accuracy), (0.0, 0.0, 0.5));
    }

    #[test]
    fn concordance_example() {
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_class_auc() {
        let m = metrics(&[false; 2], &[false; 2], &[0.1, 0.2]).unwrap();
        assert_eq!(m.auc, 0.5);
        assert!(m.note.is_some());
    }

    #[test]
    fn length_mismatch() {
        assert!(metrics(&[true], &[true, false], &[0.0, 1.0]).is_err());
    }
}
