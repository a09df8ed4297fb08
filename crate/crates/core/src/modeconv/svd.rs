//! Complex singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Columns of a working copy of `A` are rotated pairwise until they are mutually
//! orthogonal; the column norms are then the singular values and the accumulated
//! rotations form `V`. Relative orthogonality is enforced per pair, which keeps
//! small singular values accurate.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const MAX_SWEEPS: usize = 80;

/// `A = U · diag(singular_values) · Vᴴ`.
///
/// For an `r × c` input with `k = min(r, c)`, `u` is `r × k`, `v` is `c × k`,
/// both with orthonormal columns, and `singular_values` has length `k`,
/// sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
    /// Jacobi sweeps used until convergence.
    pub sweeps: usize,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

pub fn complex_svd(a: &CMatrix) -> Result<Svd> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::domain("SVD input contains non-finite entries"));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::domain("SVD input must be at least 1x1"));
    }
    if a.nrows() >= a.ncols() {
        tall_svd(a)
    } else {
        let t = tall_svd(&a.adjoint())?;
        Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
            sweeps: t.sweeps,
        })
    }
}

fn tall_svd(a: &CMatrix) -> Result<Svd> {
    let rows = a.nrows();
    let cols = a.ncols();
    let mut w = a.clone();
    let mut v = CMatrix::identity(cols, cols);
    let tol = f64::EPSILON * rows as f64;

    let mut sweeps = 0;
    let mut converged = cols < 2;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NonConvergence {
                method: "one-sided Jacobi SVD",
                iterations: sweeps,
            });
        }
        sweeps += 1;
        converged = true;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for k in 0..rows {
                    let ap = w[(k, p)];
                    let aq = w[(k, q)];
                    alpha += ap.norm_sqr();
                    beta += aq.norm_sqr();
                    gamma += ap.conj() * aq;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // [a_p a_q] <- [a_p a_q] J, J = [[c, s e^{iφ}], [-s e^{-iφ}, c]]
                let s_fwd = phase * s;
                let s_back = phase.conj() * s;
                for k in 0..rows {
                    let ap = w[(k, p)];
                    let aq = w[(k, q)];
                    w[(k, p)] = ap * c - aq * s_back;
                    w[(k, q)] = ap * s_fwd + aq * c;
                }
                for k in 0..cols {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp * c - vq * s_back;
                    v[(k, q)] = vp * s_fwd + vq * c;
                }
            }
        }
    }

    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma_max = norms[order[0]];
    let negligible = sigma_max * f64::EPSILON * rows.max(cols) as f64;

    let mut u = CMatrix::zeros(rows, cols);
    let mut vs = CMatrix::zeros(cols, cols);
    let mut singular_values = Vec::with_capacity(cols);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        vs.set_column(dst, &v.column(src));
        if s > negligible && s > 0.0 {
            u.set_column(dst, &(w.column(src) / Complex64::new(s, 0.0)));
        } else {
            deficient.push(dst);
        }
    }
    if !deficient.is_empty() {
        complete_orthonormal(&mut u, &deficient);
    }

    // Phase convention: the largest-magnitude entry of each left vector is real positive.
    for j in 0..cols {
        let col = u.column(j);
        let mut best = 0;
        let mut best_mag = -1.0f64;
        for (i, z) in col.iter().enumerate() {
            let m = z.norm();
            if m > best_mag + 1e-12 * best_mag.max(0.0) {
                best = i;
                best_mag = m;
            }
        }
        let pivot = u[(best, j)];
        if pivot.norm() > 0.0 {
            let rot = pivot.conj() / pivot.norm();
            u.column_mut(j).iter_mut().for_each(|z| *z *= rot);
            vs.column_mut(j).iter_mut().for_each(|z| *z *= rot);
            u[(best, j)] = Complex64::new(u[(best, j)].norm(), 0.0);
        }
    }

    Ok(Svd {
        u,
        singular_values,
        v: vs,
        sweeps,
    })
}

/// Fill the listed columns of `u` with unit vectors orthogonal to every other column.
fn complete_orthonormal(u: &mut CMatrix, columns: &[usize]) {
    let rows = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !columns.contains(j)).collect();
    let mut candidate = 0;
    for &j in columns {
        while candidate < rows {
            let mut e = DVector::<Complex64>::zeros(rows);
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            // Two Gram-Schmidt passes for numerical orthogonality.
            for _ in 0..2 {
                for &k in &filled {
                    let uk = u.column(k);
                    let proj = uk.dotc(&e);
                    e -= uk * proj;
                }
            }
            let nrm = e.norm();
            if nrm > 1e-8 {
                u.set_column(j, &(e / Complex64::new(nrm, 0.0)));
                filled.push(j);
                break;
            }
        }
    }
}
