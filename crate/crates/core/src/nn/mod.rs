//! Graph autoencoder built from ModeConv or Chebyshev layers, with
//! hand-written reverse-mode gradients.

pub mod checkpoint;
pub mod graphcon;
pub mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::LayerKind;
use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::modeconv::cheb::{cheb_backward, cheb_forward, ChebCache, ChebWeights, ScaledLaplacian};
use crate::modeconv::fast::{modeconv_fast_backward, modeconv_fast_forward, SplitBasis};
use crate::modeconv::laplace::{modeconv_laplace_backward, modeconv_laplace_forward};
use crate::modeconv::{OpCounter, SpectralOutput, SpectralWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layer {
    Fast(SpectralWeights),
    Laplace(SpectralWeights),
    Cheb(ChebWeights),
}

impl Layer {
    pub fn tensors(&self) -> Vec<&RMatrix> {
        match self {
            Layer::Fast(w) | Layer::Laplace(w) => vec![&w.w_r, &w.w_i, &w.mix, &w.bias],
            Layer::Cheb(w) => w.theta.iter().chain(std::iter::once(&w.bias)).collect(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut RMatrix> {
        match self {
            Layer::Fast(w) | Layer::Laplace(w) => {
                vec![&mut w.w_r, &mut w.w_i, &mut w.mix, &mut w.bias]
            }
            Layer::Cheb(w) => w
                .theta
                .iter_mut()
                .chain(std::iter::once(&mut w.bias))
                .collect(),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            Layer::Fast(w) => Layer::Fast(SpectralWeights::zeros(w.d_in(), w.d_out())),
            Layer::Laplace(w) => Layer::Laplace(SpectralWeights::zeros(w.d_in(), w.d_out())),
            Layer::Cheb(w) => Layer::Cheb(ChebWeights::zeros(w.order(), w.d_in(), w.d_out())),
        }
    }
}

/// Encoder layers down to the bottleneck followed by the mirrored decoder.
///
/// ReLU follows every layer except the last, whose output is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    pub kind: LayerKind,
    /// Feature widths at each layer boundary, `layers.len() + 1` entries.
    pub dims: Vec<usize>,
    pub layers: Vec<Layer>,
}

impl AutoencoderParams {
    /// Widths `[d_in, hidden × (L−1), bottleneck, hidden × (L−1), d_in]`.
    pub fn layer_dims(
        d_in: usize,
        hidden: usize,
        bottleneck: usize,
        layer_count: usize,
    ) -> Vec<usize> {
        let mut enc = vec![d_in];
        enc.extend(std::iter::repeat_n(hidden, layer_count.saturating_sub(1)));
        enc.push(bottleneck);
        let mut dims = enc.clone();
        dims.extend(enc.iter().rev().skip(1));
        dims
    }

    /// Glorot-uniform weights (`±sqrt(6 / (fan_in + fan_out))`), zero biases.
    ///
    /// `cheb_size` is the Chebyshev filter size, the number of polynomial
    /// terms `T_0..T_{K−1}`; it is ignored by the complex layers.
    pub fn init(
        kind: LayerKind,
        dims: &[usize],
        cheb_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) || (kind == LayerKind::Cheb && cheb_size == 0) {
            return Err(Error::Config(format!("invalid layer widths {dims:?}")));
        }
        let glorot = |rows: usize, cols: usize, rng: &mut dyn rand::RngCore| {
            let a = (6.0 / (rows + cols) as f64).sqrt();
            RMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-a..=a))
        };
        let layers = dims
            .windows(2)
            .map(|d| {
                let (di, d_out) = (d[0], d[1]);
                match kind {
                    LayerKind::Fast | LayerKind::Laplace => {
                        let w = SpectralWeights {
                            w_r: glorot(di, d_out, rng),
                            w_i: glorot(di, d_out, rng),
                            mix: glorot(2 * d_out, d_out, rng),
                            bias: RMatrix::zeros(1, d_out),
                        };
                        if kind == LayerKind::Fast {
                            Layer::Fast(w)
                        } else {
                            Layer::Laplace(w)
                        }
                    }
                    LayerKind::Cheb => Layer::Cheb(ChebWeights {
                        theta: (0..cheb_size).map(|_| glorot(di, d_out, rng)).collect(),
                        bias: RMatrix::zeros(1, d_out),
                    }),
                }
            })
            .collect();
        Ok(Self {
            kind,
            dims: dims.to_vec(),
            layers,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            kind: self.kind,
            dims: self.dims.clone(),
            layers: self.layers.iter().map(Layer::zeros_like).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.tensors())
            .map(|t| t.len())
            .sum()
    }

    /// All parameters in layer order, each tensor column-major.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.tensors())
            .flat_map(|t| t.iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::domain(format!(
                "{} values for {} parameters",
                values.len(),
                self.param_count()
            )));
        }
        let mut k = 0;
        for t in self.layers.iter_mut().flat_map(|l| l.tensors_mut()) {
            for v in t.iter_mut() {
                *v = values[k];
                k += 1;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }

    /// `self += scale · other`, tensor by tensor.
    pub fn axpy(&mut self, scale: f64, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (ta, tb) in a.tensors_mut().into_iter().zip(b.tensors()) {
                *ta += tb * scale;
            }
        }
    }

    fn check_input(&self, x: &RMatrix) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::domain(format!(
                "input has {} features, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

/// Graph-dependent operators of one batch. Only the one matching the layer
/// kind needs to be present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchContext {
    pub basis: Option<SplitBasis>,
    pub a_norm: Option<RMatrix>,
    pub cheb: Option<ScaledLaplacian>,
}

impl BatchContext {
    fn basis(&self) -> Result<&SplitBasis> {
        self.basis
            .as_ref()
            .ok_or_else(|| Error::domain("batch has no modal basis"))
    }

    fn a_norm(&self) -> Result<&RMatrix> {
        self.a_norm
            .as_ref()
            .ok_or_else(|| Error::domain("batch has no normalized adjacency"))
    }

    fn cheb(&self) -> Result<&ScaledLaplacian> {
        self.cheb
            .as_ref()
            .ok_or_else(|| Error::domain("batch has no scaled Laplacian"))
    }
}

#[allow(clippy::large_enum_variant)]
enum LayerCache {
    Spectral {
        x_r: RMatrix,
        x_i: Option<RMatrix>,
        out: SpectralOutput,
    },
    Cheb(ChebCache),
}

struct Trace {
    caches: Vec<LayerCache>,
    /// Pre-activation output of every layer.
    pre: Vec<RMatrix>,
}

fn relu(x: &RMatrix) -> RMatrix {
    x.map(|v| v.max(0.0))
}

fn forward_trace(
    params: &AutoencoderParams,
    ctx: &BatchContext,
    x: &RMatrix,
    ops: &mut OpCounter,
) -> Result<Trace> {
    params.check_input(x)?;
    let mut x_r = x.clone();
    let mut x_i: Option<RMatrix> = None;
    let mut caches = Vec::with_capacity(params.layers.len());
    let mut pre = Vec::with_capacity(params.layers.len());
    let last = params.layers.len() - 1;
    for (idx, layer) in params.layers.iter().enumerate() {
        let (y, next_i, cache) = match layer {
            Layer::Fast(w) => {
                let out = modeconv_fast_forward(&x_r, x_i.as_ref(), ctx.basis()?, w, ops)?;
                (
                    out.y.clone(),
                    Some(out.z_i.clone()),
                    LayerCache::Spectral {
                        x_r: x_r.clone(),
                        x_i: x_i.take(),
                        out,
                    },
                )
            }
            Layer::Laplace(w) => {
                let out = modeconv_laplace_forward(&x_r, x_i.as_ref(), ctx.a_norm()?, w, ops)?;
                (
                    out.y.clone(),
                    Some(out.z_i.clone()),
                    LayerCache::Spectral {
                        x_r: x_r.clone(),
                        x_i: x_i.take(),
                        out,
                    },
                )
            }
            Layer::Cheb(w) => {
                let (y, cache) = cheb_forward(&x_r, ctx.cheb()?, w, ops)?;
                (y, None, LayerCache::Cheb(cache))
            }
        };
        if idx < last {
            x_r = relu(&y);
        }
        x_i = next_i;
        pre.push(y);
        caches.push(cache);
    }
    Ok(Trace { caches, pre })
}

/// Reconstruction of one sample `[n × d]`.
pub fn forward_sample(
    params: &AutoencoderParams,
    ctx: &BatchContext,
    x: &RMatrix,
) -> Result<RMatrix> {
    forward_sample_counted(params, ctx, x, &mut OpCounter::new())
}

pub fn forward_sample_counted(
    params: &AutoencoderParams,
    ctx: &BatchContext,
    x: &RMatrix,
    ops: &mut OpCounter,
) -> Result<RMatrix> {
    let mut t = forward_trace(params, ctx, x, ops)?;
    Ok(t.pre.pop().expect("at least one layer"))
}

/// Reconstructions of a batch of samples sharing one context.
pub fn forward(
    batch: &[RMatrix],
    params: &AutoencoderParams,
    ctx: &BatchContext,
) -> Result<Vec<RMatrix>> {
    batch
        .iter()
        .map(|x| forward_sample(params, ctx, x))
        .collect()
}

/// Mean of squared element-wise differences over the whole batch.
pub fn mse_loss(y: &[RMatrix], y_hat: &[RMatrix]) -> Result<f64> {
    if y.len() != y_hat.len() || y.iter().zip(y_hat).any(|(a, b)| a.shape() != b.shape()) {
        return Err(Error::domain("MSE inputs differ in shape"));
    }
    let count: usize = y.iter().map(|m| m.len()).sum();
    if count == 0 {
        return Err(Error::domain("MSE of an empty batch"));
    }
    let sum: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b).norm_squared())
        .sum();
    Ok(sum / count as f64)
}

/// Loss and gradient of the batch reconstruction MSE w.r.t. every parameter.
///
/// Layers flagged in `frozen` get zero gradients.
pub fn backward(
    batch: &[RMatrix],
    params: &AutoencoderParams,
    ctx: &BatchContext,
    frozen: &[bool],
) -> Result<(f64, AutoencoderParams)> {
    let count: usize = batch.iter().map(|m| m.len()).sum();
    if count == 0 {
        return Err(Error::domain("backward pass on an empty batch"));
    }
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let mut ops = OpCounter::new();
    for x in batch {
        let trace = forward_trace(params, ctx, x, &mut ops)?;
        let out = trace.pre.last().expect("at least one layer");
        let resid = out - x;
        loss += resid.norm_squared();
        let mut dy = resid * (2.0 / count as f64);
        let mut dz_i: Option<RMatrix> = None;
        for idx in (0..params.layers.len()).rev() {
            let (dx_r, dx_i) = match (
                &params.layers[idx],
                &trace.caches[idx],
                &mut grads.layers[idx],
            ) {
                (Layer::Fast(w), LayerCache::Spectral { x_i, out, .. }, Layer::Fast(g)) => {
                    let gr = modeconv_fast_backward(ctx.basis()?, w, out, &dy, dz_i.as_ref());
                    add_spectral(g, &gr.weights);
                    (gr.dx_r, x_i.as_ref().map(|_| gr.dx_i))
                }
                (Layer::Laplace(w), LayerCache::Spectral { x_r, x_i, out }, Layer::Laplace(g)) => {
                    let gr = modeconv_laplace_backward(
                        x_r,
                        x_i.as_ref(),
                        ctx.a_norm()?,
                        w,
                        out,
                        &dy,
                        dz_i.as_ref(),
                    );
                    add_spectral(g, &gr.weights);
                    (gr.dx_r, x_i.as_ref().map(|_| gr.dx_i))
                }
                (Layer::Cheb(w), LayerCache::Cheb(cache), Layer::Cheb(g)) => {
                    let (gw, dx) = cheb_backward(ctx.cheb()?, w, cache, &dy);
                    for (a, b) in g.theta.iter_mut().zip(&gw.theta) {
                        *a += b;
                    }
                    g.bias += &gw.bias;
                    (dx, None)
                }
                _ => unreachable!("cache kind always matches layer kind"),
            };
            if idx > 0 {
                let prev = &trace.pre[idx - 1];
                dy = dx_r.zip_map(prev, |g, y| if y > 0.0 { g } else { 0.0 });
                dz_i = dx_i;
            }
        }
    }
    for (g, &f) in grads.layers.iter_mut().zip(frozen) {
        if f {
            for t in g.tensors_mut() {
                t.fill(0.0);
            }
        }
    }
    Ok((loss / count as f64, grads))
}

fn add_spectral(acc: &mut SpectralWeights, g: &SpectralWeights) {
    acc.w_r += &g.w_r;
    acc.w_i += &g.w_i;
    acc.mix += &g.mix;
    acc.bias += &g.bias;
}
