//! Pairwise covariance, normalized cross-correlation and the cross-power
//! spectrum obtained from it by the Wiener–Khinchin relation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix};
use crate::window::SignalWindow;

/// Autocovariances below this are treated as constant signals.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// What is subtracted from each signal before correlating.
#[derive(Debug, Clone, PartialEq)]
pub enum Centering {
    /// Mean of the samples in the window.
    WindowMean,
    /// A known process mean per signal.
    Fixed(Vec<f64>),
}

/// Covariance and correlation matrices, one per lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub lags: Vec<usize>,
    /// `c[k][(i, j)] = C_ij(lags[k])`
    pub c: Vec<RMatrix>,
    /// `r[k][(i, j)] = R_ij(lags[k])`
    pub r: Vec<RMatrix>,
    pub auto: Vec<f64>,
}

/// Cross-spectral matrices on a frequency grid in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub frequencies: Vec<f64>,
    pub s: Vec<CMatrix>,
}

/// `C_ij(τ) = (1/L) Σ_t (x_i(t) − µ_i)(x_j(t+τ) − µ_j)` over the overlap of
/// `L` equal-length signals, centered at the window mean.
///
/// Dividing by the full length rather than the overlap keeps every lagged
/// covariance bounded by `sqrt(C_ii(0) C_jj(0))` and the implied spectrum
/// non-negative.
pub fn covariance(signals: &[&[f64]], lags: &[usize]) -> Result<Vec<RMatrix>> {
    let l = signals.first().map_or(0, |s| s.len());
    covariance_with(signals, l, lags, &Centering::WindowMean)
}

/// Covariance of signals whose first `signals[i].len()` samples are valid
/// within a window of `window_length` samples (the rest being padding).
pub fn covariance_with(
    signals: &[&[f64]],
    window_length: usize,
    lags: &[usize],
    centering: &Centering,
) -> Result<Vec<RMatrix>> {
    if window_length < 2 {
        return Err(Error::domain(format!(
            "window length must be at least 2, got {window_length}"
        )));
    }
    if let Some(&bad) = lags.iter().find(|&&t| t >= window_length) {
        return Err(Error::domain(format!(
            "lag {bad} is not below the window length {window_length}"
        )));
    }
    let n = signals.len();
    let valid = signals.first().map_or(0, |s| s.len());
    if signals.iter().any(|s| s.len() != valid) || valid > window_length {
        return Err(Error::domain(
            "signals must share one length no longer than the window",
        ));
    }
    let means: Vec<f64> = match centering {
        Centering::WindowMean if valid > 0 => signals
            .iter()
            .map(|s| s.iter().sum::<f64>() / valid as f64)
            .collect(),
        Centering::WindowMean => vec![0.0; n],
        Centering::Fixed(m) if m.len() == n => m.clone(),
        Centering::Fixed(m) => {
            return Err(Error::domain(format!(
                "{} fixed means for {n} signals",
                m.len()
            )));
        }
    };
    let centered: Vec<Vec<f64>> = signals
        .iter()
        .zip(&means)
        .map(|(s, m)| s.iter().map(|v| v - m).collect())
        .collect();

    let mut out = Vec::with_capacity(lags.len());
    for &tau in lags {
        let mut c = RMatrix::zeros(n, n);
        if tau < valid {
            for i in 0..n {
                for j in 0..n {
                    let (xi, xj) = (&centered[i], &centered[j]);
                    let s: f64 = (0..valid - tau).map(|t| xi[t] * xj[t + tau]).sum();
                    c[(i, j)] = s / valid as f64;
                }
            }
        }
        out.push(c);
    }
    Ok(out)
}

/// `R_ij(τ) = C_ij(τ) / sqrt(C_ii(0) C_jj(0))`, zero where either
/// autocovariance is below [`DEGENERATE_EPS`].
pub fn cross_correlation(c: &[RMatrix], auto: &[f64]) -> Vec<RMatrix> {
    c.iter()
        .map(|ck| {
            RMatrix::from_fn(ck.nrows(), ck.ncols(), |i, j| {
                if auto[i] < DEGENERATE_EPS || auto[j] < DEGENERATE_EPS {
                    0.0
                } else {
                    ck[(i, j)] / (auto[i] * auto[j]).sqrt()
                }
            })
        })
        .collect()
}

/// Correlation set for the given signals; lag 0 is always evaluated for the
/// normalization even when it is not among `lags`.
pub fn correlate(
    signals: &[&[f64]],
    window_length: usize,
    lags: &[usize],
    centering: &Centering,
) -> Result<CorrelationSet> {
    let c0 = covariance_with(signals, window_length, &[0], centering)?.remove(0);
    let auto: Vec<f64> = (0..signals.len()).map(|i| c0[(i, i)]).collect();
    let c = covariance_with(signals, window_length, lags, centering)?;
    let r = cross_correlation(&c, &auto);
    Ok(CorrelationSet {
        lags: lags.to_vec(),
        c,
        r,
        auto,
    })
}

/// Correlation of the first channel of a window over lags `0..l`, padding excluded.
pub fn window_correlation(w: &SignalWindow) -> Result<CorrelationSet> {
    let valid = w.valid_len();
    let signals: Vec<&[f64]> = (0..w.node_count)
        .map(|i| &w.channel(i, 0)[..valid])
        .collect();
    let lags: Vec<usize> = (0..w.length).collect();
    correlate(&signals, w.length, &lags, &Centering::WindowMean)
}

/// `l` frequencies evenly spaced from 0 to `fs/2` inclusive.
pub fn default_frequency_grid(l: usize, sample_rate: f64) -> Vec<f64> {
    match l {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..l)
            .map(|k| k as f64 * sample_rate / (2.0 * (l - 1) as f64))
            .collect(),
    }
}

/// `S_ij(f) = Σ_τ R_ij(τ) e^{−i2πfτ/fs}` over the lag grid mirrored to negative
/// lags with `R(−τ) = R(τ)ᵀ`.
pub fn psd(
    r: &[RMatrix],
    lags: &[usize],
    sample_rate: f64,
    frequencies: &[f64],
) -> Result<SpectralEstimate> {
    if lags.is_empty() || r.is_empty() {
        return Err(Error::domain("PSD needs a non-empty lag grid"));
    }
    if r.len() != lags.len() {
        return Err(Error::domain(format!(
            "{} correlation matrices for {} lags",
            r.len(),
            lags.len()
        )));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::domain(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    let n = r[0].nrows();
    let s = frequencies
        .iter()
        .map(|&f| {
            let mut s = CMatrix::zeros(n, n);
            for (rk, &tau) in r.iter().zip(lags) {
                let e = Complex64::from_polar(1.0, -2.0 * PI * f * tau as f64 / sample_rate);
                for i in 0..n {
                    for j in 0..n {
                        s[(i, j)] += e * rk[(i, j)];
                        if tau > 0 {
                            s[(i, j)] += e.conj() * rk[(j, i)];
                        }
                    }
                }
            }
            s
        })
        .collect();
    Ok(SpectralEstimate {
        frequencies: frequencies.to_vec(),
        s,
    })
}

/// `|R_ij(0)|` off the diagonal, 1 on it.
pub fn edge_weights_from_correlation(r0: &RMatrix) -> Result<RMatrix> {
    if r0.nrows() != r0.ncols() {
        return Err(Error::domain("correlation matrix must be square"));
    }
    Ok(RMatrix::from_fn(r0.nrows(), r0.ncols(), |i, j| {
        if i == j {
            1.0
        } else {
            r0[(i, j)].abs()
        }
    }))
}
