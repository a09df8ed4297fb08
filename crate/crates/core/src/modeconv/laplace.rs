//! ModeConv-Laplace: complex message passing over the normalized adjacency.
//!
//! Each node state is `x_r + i x_i`; messages are `(w_r + i w_i)` applied to
//! the neighbour state and aggregated with the `A_norm` weights.

use super::{mix_backward, mix_output, OpCounter, SpectralGrads, SpectralOutput, SpectralWeights};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// `Z = A_norm (X W)` in complex arithmetic, then `y = [Re Z | Im Z] · mix + bias`.
pub fn modeconv_laplace_forward(
    x_r: &RMatrix,
    x_i: Option<&RMatrix>,
    a_norm: &RMatrix,
    w: &SpectralWeights,
    ops: &mut OpCounter,
) -> Result<SpectralOutput> {
    w.check()?;
    let n = a_norm.nrows();
    if a_norm.ncols() != n
        || x_r.shape() != (n, w.d_in())
        || x_i.is_some_and(|x| x.shape() != x_r.shape())
    {
        return Err(Error::domain(format!(
            "laplace layer expects {n}x{} input, got {}x{}",
            w.d_in(),
            x_r.nrows(),
            x_r.ncols()
        )));
    }
    let mut p_r = ops.mm(x_r, &w.w_r);
    let mut p_i = ops.mm(x_r, &w.w_i);
    if let Some(x_i) = x_i {
        p_r -= ops.mm(x_i, &w.w_i);
        p_i += ops.mm(x_i, &w.w_r);
    }
    let z_r = ops.mm(a_norm, &p_r);
    let z_i = ops.mm(a_norm, &p_i);
    let y = mix_output(&z_r, &z_i, w, ops);
    Ok(SpectralOutput {
        y,
        z_r,
        z_i,
        p_r,
        p_i,
    })
}

pub fn modeconv_laplace_backward(
    x_r: &RMatrix,
    x_i: Option<&RMatrix>,
    a_norm: &RMatrix,
    w: &SpectralWeights,
    cache: &SpectralOutput,
    dy: &RMatrix,
    dz_i_extra: Option<&RMatrix>,
) -> SpectralGrads {
    let mut grads = SpectralWeights::zeros(w.d_in(), w.d_out());
    let (g_zr, mut g_zi) = mix_backward(dy, &cache.z_r, &cache.z_i, w, &mut grads);
    if let Some(extra) = dz_i_extra {
        g_zi += extra;
    }
    let g_pr = a_norm.tr_mul(&g_zr);
    let g_pi = a_norm.tr_mul(&g_zi);
    // G_W = Xᴴ G_P
    grads.w_r = x_r.tr_mul(&g_pr);
    grads.w_i = x_r.tr_mul(&g_pi);
    if let Some(x_i) = x_i {
        grads.w_r += x_i.tr_mul(&g_pi);
        grads.w_i -= x_i.tr_mul(&g_pr);
    }
    // G_X = G_P Wᴴ
    let wrt = w.w_r.transpose();
    let wit = w.w_i.transpose();
    let dx_r = &g_pr * &wrt + &g_pi * &wit;
    let dx_i = &g_pi * &wrt - &g_pr * &wit;
    SpectralGrads {
        weights: grads,
        dx_r,
        dx_i,
    }
}
