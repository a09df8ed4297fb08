//! Modal graph convolution: spectral weighting, the SVD filter bank, the
//! ModeConv-Fast and ModeConv-Laplace layers, and the Chebyshev baseline.

pub mod cheb;
pub mod fast;
pub mod laplace;
pub mod laplacian;
pub mod ops;
pub mod spectrum;
pub mod svd;

pub use cheb::{cheb_backward, cheb_forward, ChebFilter, ChebWeights, ScaledLaplacian};
pub use fast::{modeconv_fast_backward, modeconv_fast_forward};
pub use laplace::{modeconv_laplace_backward, modeconv_laplace_forward};
pub use laplacian::{normalized_laplacian, NormalizedLaplacian};
pub use ops::OpCounter;
pub use spectrum::{filter_bank, select_bins, weighted_psd, ComplexFilterBank, ModalBasis};
pub use svd::{complex_svd, Svd};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use serde::{Deserialize, Serialize};

/// Learnable parameters shared by both complex layer kinds.
///
/// The complex weight is `w_r + i w_i` (`d_in × d_out`); the real and
/// imaginary parts of the complex output are stacked and mapped back to
/// `d_out` channels by `mix` (`2 d_out × d_out`) plus `bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralWeights {
    pub w_r: RMatrix,
    pub w_i: RMatrix,
    pub mix: RMatrix,
    pub bias: RMatrix,
}

impl SpectralWeights {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            w_r: RMatrix::zeros(d_in, d_out),
            w_i: RMatrix::zeros(d_in, d_out),
            mix: RMatrix::zeros(2 * d_out, d_out),
            bias: RMatrix::zeros(1, d_out),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w_r.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.w_r.ncols()
    }

    fn check(&self) -> Result<()> {
        let (di, d) = self.w_r.shape();
        if self.w_i.shape() != (di, d)
            || self.mix.shape() != (2 * d, d)
            || self.bias.shape() != (1, d)
        {
            return Err(Error::domain("inconsistent complex layer weight shapes"));
        }
        Ok(())
    }
}

/// Intermediate values of a complex layer forward pass, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOutput {
    /// Real output after mixing, `n × d_out`.
    pub y: RMatrix,
    /// Complex pre-mix output, `n × d_out`.
    pub z_r: RMatrix,
    pub z_i: RMatrix,
    /// Intermediate complex product (modal coordinates for Fast, `X W` for Laplace).
    pub p_r: RMatrix,
    pub p_i: RMatrix,
}

/// Gradients of one complex layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrads {
    pub weights: SpectralWeights,
    pub dx_r: RMatrix,
    pub dx_i: RMatrix,
}

/// `y = [z_r | z_i] · mix + bias`
fn mix_output(z_r: &RMatrix, z_i: &RMatrix, w: &SpectralWeights, ops: &mut OpCounter) -> RMatrix {
    let d = w.d_out();
    let top = w.mix.rows(0, d);
    let bot = w.mix.rows(d, d);
    let mut y = ops.mm(z_r, &top.into_owned()) + ops.mm(z_i, &bot.into_owned());
    for mut row in y.row_iter_mut() {
        row += &w.bias;
    }
    y
}

/// Backward of [`mix_output`]: fills mix/bias grads, returns `(dz_r, dz_i)`.
fn mix_backward(
    dy: &RMatrix,
    z_r: &RMatrix,
    z_i: &RMatrix,
    w: &SpectralWeights,
    grads: &mut SpectralWeights,
) -> (RMatrix, RMatrix) {
    let d = w.d_out();
    grads.mix.rows_mut(0, d).copy_from(&z_r.tr_mul(dy));
    grads.mix.rows_mut(d, d).copy_from(&z_i.tr_mul(dy));
    grads.bias = RMatrix::from_fn(1, d, |_, j| dy.column(j).sum());
    let dz_r = dy * w.mix.rows(0, d).transpose();
    let dz_i = dy * w.mix.rows(d, d).transpose();
    (dz_r, dz_i)
}
