//! Small dense linear-algebra kernels shared by the structural and graph code.
//!
//! Matrices here are tiny (one row per sensor), so the cyclic Jacobi method is
//! used for symmetric eigenproblems: it is simple, deterministic and accurate to
//! machine precision in the eigenvectors.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: RMatrix,
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Only the upper triangle is trusted; the caller is expected to have checked
/// symmetry already.
pub fn symmetric_eigen(a: &RMatrix) -> Result<SymmetricEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::domain(format!(
            "eigenproblem needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut w = a.clone();
    for i in 0..n {
        for j in 0..i {
            w[(i, j)] = w[(j, i)];
        }
    }
    let mut v = RMatrix::identity(n, n);
    let scale = w.norm().max(f64::MIN_POSITIVE);

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[(p, q)] * w[(p, q)];
            }
        }
        if off.sqrt() <= f64::EPSILON * scale * 1e-2 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = w[(p, p)];
                let aqq = w[(q, q)];
                // Skip rotations that cannot change the diagonal any more.
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    w[(p, q)] = 0.0;
                    w[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[(p, k)];
                    let aqk = w[(q, k)];
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // One last check: the final sweep may have finished the job.
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[(p, q)] * w[(p, q)];
            }
        }
        if off.sqrt() > 1e-12 * scale {
            return Err(Error::NonConvergence {
                method: "symmetric Jacobi eigensolver",
                iterations: MAX_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let eigenvalues = order.iter().map(|&i| w[(i, i)]).collect();
    let eigenvectors = RMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Maximum absolute asymmetry `|a_ij - a_ji|` of a square matrix.
pub fn asymmetry(a: &RMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Sum of squared off-diagonal entries divided by the sum of squared diagonal entries.
pub fn off_diagonal_ratio(a: &RMatrix) -> f64 {
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a[(i, j)] * a[(i, j)];
            if i == j {
                diag += v;
            } else {
                off += v;
            }
        }
    }
    if diag == 0.0 {
        if off == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (off / diag).sqrt()
    }
}

pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_tridiagonal_chain() {
        let a = RMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let e = symmetric_eigen(&a).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let n = 7;
        let a = RMatrix::from_fn(n, n, |i, j| {
            let (i, j) = (i.min(j) as f64, i.max(j) as f64);
            (i * 1.3 + j * 0.7).sin() + if i == j { 3.0 } else { 0.0 }
        });
        let e = symmetric_eigen(&a).unwrap();
        let d = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.eigenvalues.clone()));
        let rec = &e.eigenvectors * d * e.eigenvectors.transpose();
        assert!((rec - &a).norm() < 1e-12 * a.norm());
        let vtv = e.eigenvectors.transpose() * &e.eigenvectors;
        assert!((vtv - RMatrix::identity(n, n)).norm() < 1e-13);
        for w in e.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eigen_rejects_rectangular() {
        assert!(symmetric_eigen(&RMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn empty_and_scalar() {
        let e = symmetric_eigen(&RMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_eq!(e.eigenvalues, vec![4.0]);
        let e = symmetric_eigen(&RMatrix::zeros(0, 0)).unwrap();
        assert!(e.eigenvalues.is_empty());
    }
}
