//! Full-batch-per-step gradient descent over fixed mini-batches.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{backward, forward, mse_loss, AutoencoderParams, BatchContext};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// Samples of one mini-batch and the graph operators they share.
#[derive(Debug, Clone)]
pub struct PreparedBatch {
    pub inputs: Vec<RMatrix>,
    pub context: BatchContext,
    /// Window indices the samples came from.
    pub windows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub learning_rate: f64,
    /// Total epochs; a resumed run continues up to this count.
    pub epochs: usize,
    pub seed: u64,
    /// Per-layer freeze flags; missing entries mean trainable.
    pub frozen: Vec<bool>,
}

/// Everything needed to continue a run bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub epoch: usize,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<Option<f64>>,
    pub gradient_norm: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub best_loss: Option<f64>,
}

impl TrainState {
    pub fn new() -> Self {
        Self {
            epoch: 0,
            train_loss: Vec::new(),
            validation_loss: Vec::new(),
            gradient_norm: Vec::new(),
            best_epoch: None,
            best_loss: None,
        }
    }
}

impl Default for TrainState {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: AutoencoderParams,
    /// Parameters at the epoch with the lowest validation loss
    /// (training loss when there is no validation data).
    pub best: AutoencoderParams,
    pub state: TrainState,
}

/// `p ← p − lr · g`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], learning_rate: f64) {
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= learning_rate * g;
    }
}

/// Batch order of one epoch. Depends only on the seed and the epoch index.
pub fn epoch_order(seed: u64, epoch: usize, batches: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    let mut order: Vec<usize> = (0..batches).collect();
    order.shuffle(&mut rng);
    order
}

/// Mean reconstruction loss over batches, weighted by element count.
pub fn evaluate_loss(params: &AutoencoderParams, batches: &[PreparedBatch]) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for b in batches {
        if b.inputs.is_empty() {
            continue;
        }
        let out = forward(&b.inputs, params, &b.context)?;
        let n: usize = b.inputs.iter().map(|m| m.len()).sum();
        sum += mse_loss(&b.inputs, &out)? * n as f64;
        count += n;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Train `params` for `opts.epochs` epochs in total.
///
/// Passing the `state` and `best` of an earlier run resumes it; the result is
/// identical to an uninterrupted run with the same options.
pub fn train(
    mut params: AutoencoderParams,
    train_batches: &[PreparedBatch],
    validation: &[PreparedBatch],
    opts: &TrainOptions,
    resume: Option<(TrainState, AutoencoderParams)>,
) -> Result<TrainOutcome> {
    if !(opts.learning_rate.is_finite() && opts.learning_rate >= 0.0) {
        return Err(Error::Config(format!(
            "learning rate {} is invalid",
            opts.learning_rate
        )));
    }
    if train_batches.iter().all(|b| b.inputs.is_empty()) {
        return Err(Error::Config("no training samples".into()));
    }
    let (mut state, mut best) = resume.unwrap_or_else(|| (TrainState::new(), params.clone()));
    let total: usize = train_batches
        .iter()
        .map(|b| b.inputs.iter().map(|m| m.len()).sum::<usize>())
        .sum();
    let mut flat = params.flatten();

    while state.epoch < opts.epochs {
        let epoch = state.epoch;
        // Losses are stored per batch and summed in index order so that the
        // history does not depend on the visiting order.
        let mut batch_loss = vec![0.0; train_batches.len()];
        let mut sq_norm = 0.0;
        for &bi in &epoch_order(opts.seed, epoch, train_batches.len()) {
            let batch = &train_batches[bi];
            if batch.inputs.is_empty() {
                continue;
            }
            let (loss, grads) = backward(&batch.inputs, &params, &batch.context, &opts.frozen)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            let n: usize = batch.inputs.iter().map(|m| m.len()).sum();
            batch_loss[bi] = loss * n as f64;
            let g = grads.flatten();
            sq_norm += g.iter().map(|v| v * v).sum::<f64>();
            sgd_step(&mut flat, &g, opts.learning_rate);
            params.set_flat(&flat)?;
        }
        let train_loss = batch_loss.iter().sum::<f64>() / total as f64;
        if !params.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let val = evaluate_loss(&params, validation)?;
        if let Some(v) = val {
            if !v.is_finite() {
                return Err(Error::Diverged { epoch, loss: v });
            }
        }
        let monitored = val.unwrap_or(train_loss);
        if state.best_loss.is_none_or(|b| monitored < b) {
            state.best_loss = Some(monitored);
            state.best_epoch = Some(epoch);
            best = params.clone();
        }
        state.train_loss.push(train_loss);
        state.validation_loss.push(val);
        state.gradient_norm.push(sq_norm.sqrt());
        state.epoch += 1;
    }
    Ok(TrainOutcome {
        params,
        best,
        state,
    })
}
