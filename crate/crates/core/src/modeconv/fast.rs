//! ModeConv-Fast: project node features onto the retained modes, apply the
//! complex weight in modal coordinates and project back. No `n × n` product
//! is formed, so a pass costs `O(n · m · d)`.

use super::{
    mix_backward, mix_output, ModalBasis, OpCounter, SpectralGrads, SpectralOutput, SpectralWeights,
};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// `U_m` split into real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitBasis {
    pub u_r: RMatrix,
    pub u_i: RMatrix,
}

impl From<&ModalBasis> for SplitBasis {
    fn from(b: &ModalBasis) -> Self {
        let (u_r, u_i) = b.split();
        Self { u_r, u_i }
    }
}

/// `P = U_mᴴ X`, `Q = P W`, `Z = U_m Q`, `y = [Re Z | Im Z] · mix + bias`.
///
/// `x_i` is the imaginary input channel (absent for real inputs).
pub fn modeconv_fast_forward(
    x_r: &RMatrix,
    x_i: Option<&RMatrix>,
    basis: &SplitBasis,
    w: &SpectralWeights,
    ops: &mut OpCounter,
) -> Result<SpectralOutput> {
    w.check()?;
    let n = basis.u_r.nrows();
    if x_r.shape() != (n, w.d_in()) || x_i.is_some_and(|x| x.shape() != x_r.shape()) {
        return Err(Error::domain(format!(
            "fast layer expects {n}x{} input, got {}x{}",
            w.d_in(),
            x_r.nrows(),
            x_r.ncols()
        )));
    }
    let (ur, ui) = (&basis.u_r, &basis.u_i);
    let mut p_r = ops.mm_tn(ur, x_r);
    let mut p_i = -ops.mm_tn(ui, x_r);
    if let Some(x_i) = x_i {
        p_r += ops.mm_tn(ui, x_i);
        p_i += ops.mm_tn(ur, x_i);
    }
    let q_r = ops.mm(&p_r, &w.w_r) - ops.mm(&p_i, &w.w_i);
    let q_i = ops.mm(&p_r, &w.w_i) + ops.mm(&p_i, &w.w_r);
    let z_r = ops.mm(ur, &q_r) - ops.mm(ui, &q_i);
    let z_i = ops.mm(ur, &q_i) + ops.mm(ui, &q_r);
    let y = mix_output(&z_r, &z_i, w, ops);
    Ok(SpectralOutput {
        y,
        z_r,
        z_i,
        p_r,
        p_i,
    })
}

/// Gradients given `dy` (w.r.t. `y`) and optionally `dz_i` (w.r.t. the
/// imaginary channel handed to the next layer). `U_m` is held constant.
pub fn modeconv_fast_backward(
    basis: &SplitBasis,
    w: &SpectralWeights,
    cache: &SpectralOutput,
    dy: &RMatrix,
    dz_i_extra: Option<&RMatrix>,
) -> SpectralGrads {
    let (ur, ui) = (&basis.u_r, &basis.u_i);
    let mut grads = SpectralWeights::zeros(w.d_in(), w.d_out());
    let (g_zr, mut g_zi) = mix_backward(dy, &cache.z_r, &cache.z_i, w, &mut grads);
    if let Some(extra) = dz_i_extra {
        g_zi += extra;
    }
    // G_Q = Uᴴ G_Z
    let g_qr = ur.tr_mul(&g_zr) + ui.tr_mul(&g_zi);
    let g_qi = ur.tr_mul(&g_zi) - ui.tr_mul(&g_zr);
    // G_W = Pᴴ G_Q
    grads.w_r = cache.p_r.tr_mul(&g_qr) + cache.p_i.tr_mul(&g_qi);
    grads.w_i = cache.p_r.tr_mul(&g_qi) - cache.p_i.tr_mul(&g_qr);
    // G_P = G_Q Wᴴ
    let wrt = w.w_r.transpose();
    let wit = w.w_i.transpose();
    let g_pr = &g_qr * &wrt + &g_qi * &wit;
    let g_pi = &g_qi * &wrt - &g_qr * &wit;
    // G_X = U G_P
    let dx_r = ur * &g_pr - ui * &g_pi;
    let dx_i = ur * &g_pi + ui * &g_pr;
    SpectralGrads {
        weights: grads,
        dx_r,
        dx_i,
    }
}
