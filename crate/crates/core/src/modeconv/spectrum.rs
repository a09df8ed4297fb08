use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::svd::complex_svd;
use crate::config::Weighting;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix};

/// Per-frequency response-weighted spectrum.
pub fn weighted_psd(s: &[CMatrix], h: &[CMatrix], weighting: Weighting) -> Result<Vec<CMatrix>> {
    if s.len() != h.len() {
        return Err(Error::domain(format!(
            "spectrum has {} bins but the response has {}",
            s.len(),
            h.len()
        )));
    }
    s.iter()
        .zip(h)
        .map(|(s, h)| {
            if s.shape() != h.shape() || s.nrows() != s.ncols() {
                return Err(Error::domain(
                    "spectrum and response must be square matrices of equal size",
                ));
            }
            Ok(match weighting {
                Weighting::MatrixProduct => s * h.transpose(),
                Weighting::Elementwise => s.component_mul(h),
                Weighting::Congruence => h * s * h.adjoint(),
            })
        })
        .collect()
}

/// Up to `count` bins at local maxima of `Re tr S(f)`, tallest first.
pub fn select_bins(s: &[CMatrix], count: usize) -> Vec<usize> {
    let tr: Vec<f64> = s.iter().map(|m| m.trace().re).collect();
    let last = tr.len().saturating_sub(1);
    let mut peaks: Vec<usize> = (0..tr.len())
        .filter(|&k| (k == 0 || tr[k] >= tr[k - 1]) && (k == last || tr[k] >= tr[k + 1]))
        .collect();
    peaks.sort_by(|&a, &b| tr[b].total_cmp(&tr[a]).then(a.cmp(&b)));
    peaks.truncate(count);
    peaks
}

/// Leading left singular vectors of an aggregated spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalBasis {
    /// `n × m`, orthonormal columns.
    pub u: CMatrix,
    /// Descending, length `m`.
    pub singular_values: Vec<f64>,
}

impl ModalBasis {
    pub fn node_count(&self) -> usize {
        self.u.nrows()
    }

    pub fn modes(&self) -> usize {
        self.u.ncols()
    }

    /// Real and imaginary parts of `U_m`.
    pub fn split(&self) -> (RMatrix, RMatrix) {
        (self.u.map(|z| z.re), self.u.map(|z| z.im))
    }

    /// Share of the total singular value mass kept in the `m` retained modes,
    /// relative to `all` (the full spectrum).
    pub fn captured_energy(&self, all: &[f64]) -> f64 {
        let total: f64 = all.iter().sum();
        if total == 0.0 {
            return 1.0;
        }
        self.singular_values.iter().sum::<f64>() / total
    }
}

/// SVD of `Σ_{k ∈ bins} S_yy[k]`, truncated to `m` modes.
pub fn filter_bank(s_yy: &[CMatrix], bins: &[usize], m: usize) -> Result<ModalBasis> {
    let first = s_yy
        .first()
        .ok_or_else(|| Error::domain("empty weighted spectrum"))?;
    let n = first.nrows();
    if m == 0 || m > n {
        return Err(Error::domain(format!(
            "retained modes must be in 1..={n}, got {m}"
        )));
    }
    if bins.is_empty() {
        return Err(Error::domain("no frequency bins selected"));
    }
    let mut agg = CMatrix::zeros(n, n);
    for &k in bins {
        let s = s_yy
            .get(k)
            .ok_or_else(|| Error::domain(format!("bin {k} outside the {}-bin grid", s_yy.len())))?;
        agg += s;
    }
    let svd = complex_svd(&agg)?;
    Ok(ModalBasis {
        u: svd.u.columns(0, m).into_owned(),
        singular_values: svd.singular_values[..m].to_vec(),
    })
}

/// A modal basis with the learnable complex weight of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexFilterBank {
    pub basis: ModalBasis,
    pub w_r: RMatrix,
    pub w_i: RMatrix,
}

impl ComplexFilterBank {
    pub fn new(basis: ModalBasis, w_r: RMatrix, w_i: RMatrix) -> Result<Self> {
        if w_r.shape() != w_i.shape() {
            return Err(Error::domain("real and imaginary weights differ in shape"));
        }
        Ok(Self { basis, w_r, w_i })
    }

    pub fn weight(&self) -> CMatrix {
        CMatrix::from_fn(self.w_r.nrows(), self.w_r.ncols(), |i, j| {
            Complex64::new(self.w_r[(i, j)], self.w_i[(i, j)])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_weighting() {
        let s = vec![CMatrix::from_fn(2, 2, |i, j| {
            Complex64::new(i as f64, j as f64)
        })];
        let h = vec![CMatrix::identity(2, 2)];
        for w in [Weighting::MatrixProduct, Weighting::Congruence] {
            assert_eq!(weighted_psd(&s, &h, w).unwrap(), s);
        }
    }

    #[test]
    fn diagonal_weighting() {
        let s = vec![CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(2.0),
            c(3.0),
        ]))];
        let h = vec![CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(5.0),
            c(7.0),
        ]))];
        let out = weighted_psd(&s, &h, Weighting::MatrixProduct).unwrap();
        assert_eq!(
            out[0],
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(10.0), c(21.0)]))
        );
    }

    #[test]
    fn grid_mismatch() {
        let s = vec![CMatrix::zeros(2, 2); 3];
        let h = vec![CMatrix::zeros(2, 2); 2];
        assert!(weighted_psd(&s, &h, Weighting::MatrixProduct).is_err());
    }

    #[test]
    fn bins_are_peaks_by_height() {
        let tr = [1.0, 3.0, 2.0, 5.0, 4.0, 4.5];
        let s: Vec<CMatrix> = tr
            .iter()
            .map(|&v| CMatrix::from_element(1, 1, c(v)))
            .collect();
        assert_eq!(select_bins(&s, 2), vec![3, 5]);
        assert_eq!(select_bins(&s, 10), vec![3, 5, 1]);
    }

    #[test]
    fn rank_one_captures_everything() {
        let v = nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 1.0),
            c(2.0),
            Complex64::new(0.0, -1.0),
        ]);
        let a = &v * v.adjoint();
        let full = complex_svd(&a).unwrap();
        let b = filter_bank(&[a], &[0], 1).unwrap();
        assert!((b.captured_energy(&full.singular_values) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_modes() {
        assert!(filter_bank(&[CMatrix::identity(2, 2)], &[0], 3).is_err());
    }
}
