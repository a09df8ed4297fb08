//! End-to-end glue: dataset preparation, per-batch graph operators, training
//! and scoring.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anomaly::{fit_l1, fit_mahalanobis, l1_norm, AnomalyReport, ThresholdModel};
use crate::config::{LayerKind, RunConfig, ThresholdKind, Weighting};
use crate::dataset::{node_features, normalize_with_split, DatasetSplit, Normalization};
use crate::error::{Error, Result};
use crate::graph::SensorGraph;
use crate::linalg::{CMatrix, RMatrix};
use crate::manifest::Manifest;
use crate::modeconv::cheb::ScaledLaplacian;
use crate::modeconv::fast::SplitBasis;
use crate::modeconv::{filter_bank, normalized_laplacian, select_bins, weighted_psd};
use crate::nn::train::{train, PreparedBatch, TrainOptions, TrainOutcome, TrainState};
use crate::nn::{forward, AutoencoderParams, BatchContext};
use crate::signal::{default_frequency_grid, psd, window_correlation};
use crate::structure::{assemble_matrices, frf_direct};
use crate::window::SignalWindow;

/// Structural frequency response on the PSD grid, shared by every batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSetup {
    pub sample_rate: f64,
    pub frequencies: Vec<f64>,
    pub h: Vec<CMatrix>,
    pub weighting: Weighting,
    pub modes: usize,
    pub kind: LayerKind,
}

impl SpectralSetup {
    pub fn new(manifest: &Manifest, cfg: &RunConfig) -> Result<Self> {
        let s = assemble_matrices(
            &manifest.node_masses,
            manifest.stiffness,
            cfg.damping_ratio,
            None,
        )?;
        let frequencies = default_frequency_grid(manifest.window_length, manifest.sample_rate);
        let omega: Vec<f64> = frequencies
            .iter()
            .map(|f| 2.0 * std::f64::consts::PI * f)
            .collect();
        let h = frf_direct(&s.mass, &s.damping, &s.stiffness, &omega)?.h;
        Ok(Self {
            sample_rate: manifest.sample_rate,
            frequencies,
            h,
            weighting: cfg.weighting,
            modes: cfg.retained_modes,
            kind: cfg.layer,
        })
    }
}

/// Average correlation matrices of a set of windows, lag by lag.
fn mean_correlation(windows: &[&SignalWindow]) -> Result<Vec<RMatrix>> {
    let first = windows
        .first()
        .ok_or_else(|| Error::domain("empty batch"))?;
    let mut acc: Option<Vec<RMatrix>> = None;
    for w in windows {
        let r = window_correlation(w)?.r;
        match &mut acc {
            None => acc = Some(r),
            Some(a) => a.iter_mut().zip(&r).for_each(|(a, b)| *a += b),
        }
    }
    let scale = 1.0 / windows.len() as f64;
    let mut r = acc.expect("non-empty batch");
    r.iter_mut().for_each(|m| *m *= scale);
    debug_assert_eq!(r.len(), first.length);
    Ok(r)
}

/// Graph operators for a batch of (normalized) windows.
pub fn batch_context(
    windows: &[&SignalWindow],
    setup: &SpectralSetup,
    graph: &SensorGraph,
) -> Result<BatchContext> {
    let r = mean_correlation(windows)?;
    match setup.kind {
        LayerKind::Fast => {
            let lags: Vec<usize> = (0..r.len()).collect();
            let s = psd(&r, &lags, setup.sample_rate, &setup.frequencies)?;
            let s_yy = weighted_psd(&s.s, &setup.h, setup.weighting)?;
            let bins = select_bins(&s_yy, setup.modes);
            let basis = filter_bank(&s_yy, &bins, setup.modes)?;
            Ok(BatchContext {
                basis: Some(SplitBasis::from(&basis)),
                ..Default::default()
            })
        }
        LayerKind::Laplace | LayerKind::Cheb => {
            let g = graph.with_correlation_weights(&r[0])?;
            let lap = normalized_laplacian(&g, true)?;
            if setup.kind == LayerKind::Laplace {
                Ok(BatchContext {
                    a_norm: Some(lap.a_norm),
                    ..Default::default()
                })
            } else {
                Ok(BatchContext {
                    cheb: Some(ScaledLaplacian::new(&lap.laplacian)?),
                    ..Default::default()
                })
            }
        }
    }
}

/// A manifest's windows, normalized, with their split.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub manifest: Manifest,
    pub graph: SensorGraph,
    pub windows: Vec<SignalWindow>,
    pub split: DatasetSplit,
    pub normalization: Normalization,
    pub setup: SpectralSetup,
}

fn check_config(manifest: &Manifest, cfg: &RunConfig) -> Result<()> {
    cfg.validate_for_nodes(manifest.node_count)?;
    if cfg.window_length != manifest.window_length || cfg.stride != manifest.stride {
        return Err(Error::Config(format!(
            "config windows ({}, stride {}) differ from the dataset's ({}, stride {})",
            cfg.window_length, cfg.stride, manifest.window_length, manifest.stride
        )));
    }
    Ok(())
}

/// Load, window, split and normalize. A given `normalization` (from a
/// checkpoint) is reused instead of fitting a new one.
pub fn prepare(
    manifest: Manifest,
    base: &Path,
    cfg: &RunConfig,
    normalization: Option<Normalization>,
) -> Result<PreparedData> {
    check_config(&manifest, cfg)?;
    let rec = manifest.load_recording(base)?;
    let raw = manifest.windows(&rec)?;
    let split = manifest.split(cfg.split)?;
    let (normalization, windows) = match normalization {
        Some(norm) => {
            let w = raw
                .iter()
                .map(|w| norm.apply(w))
                .collect::<Result<Vec<_>>>()?;
            (norm, w)
        }
        None => normalize_with_split(&raw, &split)?,
    };
    let setup = SpectralSetup::new(&manifest, cfg)?;
    Ok(PreparedData {
        graph: manifest.graph()?,
        manifest,
        windows,
        split,
        normalization,
        setup,
    })
}

impl PreparedData {
    /// Consecutive groups of at most `batch_size` of the given windows.
    pub fn batches(&self, indices: &[usize], batch_size: usize) -> Result<Vec<PreparedBatch>> {
        indices
            .chunks(batch_size.max(1))
            .map(|chunk| {
                let ws: Vec<&SignalWindow> = chunk.iter().map(|&i| &self.windows[i]).collect();
                Ok(PreparedBatch {
                    inputs: ws.iter().map(|w| node_features(w)).collect(),
                    context: batch_context(&ws, &self.setup, &self.graph)?,
                    windows: chunk.to_vec(),
                })
            })
            .collect()
    }

    pub fn feature_dim(&self) -> usize {
        crate::dataset::feature_dim(self.manifest.window_length, self.manifest.channels.len())
    }
}

/// Freshly initialized autoencoder for a prepared dataset.
pub fn init_params(data: &PreparedData, cfg: &RunConfig) -> Result<AutoencoderParams> {
    let dims = AutoencoderParams::layer_dims(
        data.feature_dim(),
        cfg.hidden_dim,
        cfg.bottleneck,
        cfg.layer_count,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    AutoencoderParams::init(cfg.layer, &dims, cfg.cheb_order, &mut rng)
}

/// Train on the training split, monitoring the validation split.
pub fn fit(
    data: &PreparedData,
    cfg: &RunConfig,
    frozen: &[bool],
    resume: Option<(AutoencoderParams, TrainState, AutoencoderParams)>,
) -> Result<TrainOutcome> {
    let train_b = data.batches(&data.split.train, cfg.batch_size)?;
    let val_b = data.batches(&data.split.validation, cfg.batch_size)?;
    let opts = TrainOptions {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        seed: cfg.seed,
        frozen: frozen.to_vec(),
    };
    match resume {
        Some((params, state, best)) => train(params, &train_b, &val_b, &opts, Some((state, best))),
        None => train(init_params(data, cfg)?, &train_b, &val_b, &opts, None),
    }
}

/// Flattened reconstruction residual of each listed window, in order.
pub fn residuals(
    data: &PreparedData,
    params: &AutoencoderParams,
    indices: &[usize],
    batch_size: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(indices.len());
    for b in data.batches(indices, batch_size)? {
        let rec = forward(&b.inputs, params, &b.context)?;
        for (x, y) in b.inputs.iter().zip(&rec) {
            out.push((y - x).iter().copied().collect());
        }
    }
    Ok(out)
}

/// Threshold fitted on the training residuals, applied to the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Window indices of the test split.
    pub windows: Vec<usize>,
    /// L1 reconstruction error per test window; independent of the threshold kind.
    pub reconstruction_error: Vec<f64>,
    pub report: AnomalyReport,
}

pub fn evaluate(
    data: &PreparedData,
    params: &AutoencoderParams,
    kind: ThresholdKind,
    percentile: f64,
    batch_size: usize,
) -> Result<Evaluation> {
    let train_r = residuals(data, params, &data.split.train, batch_size)?;
    let test = data.split.test.clone();
    let test_r = residuals(data, params, &test, batch_size)?;
    let model: ThresholdModel = match kind {
        ThresholdKind::L1 => fit_l1(
            &train_r.iter().map(|r| l1_norm(r)).collect::<Vec<_>>(),
            percentile,
        )?,
        ThresholdKind::Mahalanobis => fit_mahalanobis(&train_r, percentile)?,
    };
    let scores = model.scores(&test_r)?;
    let truth = test.iter().map(|&i| data.split.labels[i]).collect();
    Ok(Evaluation {
        reconstruction_error: test_r.iter().map(|r| l1_norm(r)).collect(),
        windows: test,
        report: AnomalyReport::new(model, scores, truth)?,
    })
}
