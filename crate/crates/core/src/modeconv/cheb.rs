//! Chebyshev spectral graph convolution, the polynomial-filter baseline.

use serde::{Deserialize, Serialize};

use super::OpCounter;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, RMatrix};

/// `L̃ = 2L/λ_max − I` stored as its nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledLaplacian {
    pub n: usize,
    pub lambda_max: f64,
    /// `(row, col, value)`, row-major.
    pub entries: Vec<(usize, usize, f64)>,
}

impl ScaledLaplacian {
    /// Rescale a symmetric Laplacian; `λ_max` comes from a dense eigensolve
    /// and falls back to 2 for a zero Laplacian.
    pub fn new(laplacian: &RMatrix) -> Result<Self> {
        let n = laplacian.nrows();
        let eig = symmetric_eigen(laplacian)?;
        let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
        let lambda_max = if top < 1e-12 { 2.0 } else { top };
        let scaled = laplacian * (2.0 / lambda_max) - RMatrix::identity(n, n);
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if scaled[(i, j)] != 0.0 {
                    entries.push((i, j, scaled[(i, j)]));
                }
            }
        }
        Ok(Self {
            n,
            lambda_max,
            entries,
        })
    }

    pub fn dense(&self) -> RMatrix {
        let mut m = RMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
        }
        m
    }

    /// `L̃ · x`, one multiply-add per stored entry and column.
    pub fn apply(&self, x: &RMatrix, ops: &mut OpCounter) -> RMatrix {
        let d = x.ncols();
        let mut out = RMatrix::zeros(self.n, d);
        for &(i, j, v) in &self.entries {
            for c in 0..d {
                out[(i, c)] += v * x[(j, c)];
            }
        }
        ops.add(self.entries.len() * d);
        out
    }
}

/// Coefficients `θ_0..θ_K` (each `d_in × d_out`) and bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebWeights {
    pub theta: Vec<RMatrix>,
    pub bias: RMatrix,
}

impl ChebWeights {
    pub fn zeros(order: usize, d_in: usize, d_out: usize) -> Self {
        Self {
            theta: vec![RMatrix::zeros(d_in, d_out); order + 1],
            bias: RMatrix::zeros(1, d_out),
        }
    }

    pub fn order(&self) -> usize {
        self.theta.len().saturating_sub(1)
    }

    pub fn d_in(&self) -> usize {
        self.theta[0].nrows()
    }

    pub fn d_out(&self) -> usize {
        self.theta[0].ncols()
    }
}

/// A Chebyshev filter bound to its graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebFilter {
    pub laplacian: ScaledLaplacian,
    pub weights: ChebWeights,
}

/// Chebyshev terms `T_0..T_K` of the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebCache {
    pub terms: Vec<RMatrix>,
}

/// `Σ_k T_k θ_k + bias` with `T_0 = X`, `T_1 = L̃X`, `T_k = 2L̃T_{k−1} − T_{k−2}`.
pub fn cheb_forward(
    x: &RMatrix,
    lap: &ScaledLaplacian,
    w: &ChebWeights,
    ops: &mut OpCounter,
) -> Result<(RMatrix, ChebCache)> {
    if w.theta.is_empty() {
        return Err(Error::domain(
            "Chebyshev filter needs at least one coefficient",
        ));
    }
    if x.shape() != (lap.n, w.d_in()) || w.theta.iter().any(|t| t.shape() != w.theta[0].shape()) {
        return Err(Error::domain(format!(
            "Chebyshev layer expects {}x{} input, got {}x{}",
            lap.n,
            w.d_in(),
            x.nrows(),
            x.ncols()
        )));
    }
    let k = w.order();
    let mut terms = Vec::with_capacity(k + 1);
    terms.push(x.clone());
    if k >= 1 {
        terms.push(lap.apply(x, ops));
    }
    for _ in 2..=k {
        let t1 = &terms[terms.len() - 1];
        let t2 = &terms[terms.len() - 2];
        let mut next = lap.apply(t1, ops);
        next.zip_apply(t2, |a, b| *a = 2.0 * *a - b);
        ops.add(next.len());
        terms.push(next);
    }
    let mut y = RMatrix::zeros(lap.n, w.d_out());
    for (t, theta) in terms.iter().zip(&w.theta) {
        y += ops.mm(t, theta);
    }
    for mut row in y.row_iter_mut() {
        row += &w.bias;
    }
    Ok((y, ChebCache { terms }))
}

/// Gradients of the coefficients and the input.
pub fn cheb_backward(
    lap: &ScaledLaplacian,
    w: &ChebWeights,
    cache: &ChebCache,
    dy: &RMatrix,
) -> (ChebWeights, RMatrix) {
    let k = w.order();
    let mut grads = ChebWeights::zeros(k, w.d_in(), w.d_out());
    grads.bias = RMatrix::from_fn(1, w.d_out(), |_, j| dy.column(j).sum());
    let mut dt: Vec<RMatrix> = Vec::with_capacity(k + 1);
    for (i, (t, theta)) in cache.terms.iter().zip(&w.theta).enumerate() {
        grads.theta[i] = t.tr_mul(dy);
        dt.push(dy * theta.transpose());
    }
    let mut scratch = OpCounter::new();
    // L̃ is symmetric, so L̃ᵀ = L̃.
    for i in (2..=k).rev() {
        let back = lap.apply(&dt[i], &mut scratch) * 2.0;
        dt[i - 1] += back;
        let di = dt[i].clone();
        dt[i - 2] -= di;
    }
    if k >= 1 {
        let back = lap.apply(&dt[1], &mut scratch);
        dt[0] += back;
    }
    (grads, dt.swap_remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> RMatrix {
        let g = crate::graph::SensorGraph::chain(vec![1.0; n], vec![]).unwrap();
        super::super::normalized_laplacian(&g, true)
            .unwrap()
            .laplacian
    }

    #[test]
    fn order_zero_is_linear_map() {
        let lap = ScaledLaplacian::new(&path_laplacian(3)).unwrap();
        let mut w = ChebWeights::zeros(0, 2, 2);
        w.theta[0] = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let x = RMatrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let (y, _) = cheb_forward(&x, &lap, &w, &mut OpCounter::new()).unwrap();
        assert_eq!(y, &x * &w.theta[0]);
    }

    #[test]
    fn zero_scaled_laplacian_kills_first_term() {
        let lap = ScaledLaplacian {
            n: 1,
            lambda_max: 2.0,
            entries: vec![],
        };
        let mut w = ChebWeights::zeros(1, 1, 1);
        w.theta[0][(0, 0)] = 3.0;
        w.theta[1][(0, 0)] = 5.0;
        let (y, _) = cheb_forward(
            &RMatrix::from_element(1, 1, 2.0),
            &lap,
            &w,
            &mut OpCounter::new(),
        )
        .unwrap();
        assert_eq!(y[(0, 0)], 6.0);
    }

    #[test]
    fn spectrum_in_unit_interval() {
        let lap = ScaledLaplacian::new(&path_laplacian(6)).unwrap();
        let e = symmetric_eigen(&lap.dense()).unwrap();
        assert!(e.eigenvalues[0] >= -1.0 - 1e-12);
        assert!((e.eigenvalues[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn count_grows_linearly_in_order() {
        let g = crate::graph::SensorGraph::fully_connected(16).unwrap();
        let l = super::super::normalized_laplacian(&g, true)
            .unwrap()
            .laplacian;
        let lap = ScaledLaplacian::new(&l).unwrap();
        let x = RMatrix::zeros(16, 4);
        let counts: Vec<u64> = (2..=6)
            .map(|k| {
                let mut ops = OpCounter::new();
                cheb_forward(&x, &lap, &ChebWeights::zeros(k, 4, 4), &mut ops).unwrap();
                ops.multiply_adds
            })
            .collect();
        let step = counts[1] - counts[0];
        assert!(step > 0);
        assert!(counts.windows(2).all(|w| w[1] - w[0] == step));
    }
}
