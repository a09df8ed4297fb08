//! Lumped mass-spring-damper chain: matrix assembly, undamped eigenmodes,
//! modal projection and the frequency-response function in direct and
//! modal-residue form.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, off_diagonal_ratio, symmetric_eigen, to_complex, CMatrix, RMatrix};

/// Off-diagonal share tolerated in the projected modal damping matrix.
pub const PROPORTIONALITY_TOLERANCE: f64 = 1e-6;
/// Off-diagonal share tolerated in the projected modal mass and stiffness.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;
const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralMatrices {
    pub mass: RMatrix,
    pub stiffness: RMatrix,
    pub damping: RMatrix,
    /// Spring constant `k` of the series pattern.
    pub spring: f64,
    pub damping_ratio: f64,
    /// Rayleigh coefficients, `C = alpha M + beta K`.
    pub alpha: f64,
    pub beta: f64,
}

/// Tridiagonal chain stiffness: `2k` on the diagonal, `-k` beside it.
pub fn series_stiffness(n: usize, k: f64) -> RMatrix {
    RMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * k
        } else if i.abs_diff(j) == 1 {
            -k
        } else {
            0.0
        }
    })
}

/// Chain stiffness from individual spring constants.
///
/// `springs` has `n + 1` entries; spring `j` joins node `j - 1` and node `j`,
/// with the two end springs anchored to ground. Equal springs reproduce
/// [`series_stiffness`].
pub fn chain_stiffness(springs: &[f64]) -> RMatrix {
    let n = springs.len().saturating_sub(1);
    let mut k = RMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = springs[i] + springs[i + 1];
        if i + 1 < n {
            k[(i, i + 1)] = -springs[i + 1];
            k[(i + 1, i)] = -springs[i + 1];
        }
    }
    k
}

/// `(alpha, beta)` meeting damping ratio `xi` exactly at `w1` and `w2` (rad/s).
///
/// With `w2 = None` (single degree of freedom) the damping is purely
/// stiffness-proportional.
pub fn rayleigh_coefficients(xi: f64, w1: f64, w2: Option<f64>) -> Result<(f64, f64)> {
    match w2 {
        None => {
            if w1 <= 0.0 {
                return Err(Error::domain("reference frequency must be positive"));
            }
            Ok((0.0, 2.0 * xi / w1))
        }
        Some(w2) => {
            if w1 <= 0.0 || w2 <= 0.0 || w1 == w2 {
                return Err(Error::domain(format!(
                    "Rayleigh reference frequencies must be positive and distinct, got {w1} and {w2}"
                )));
            }
            Ok((2.0 * xi * w1 * w2 / (w1 + w2), 2.0 * xi / (w1 + w2)))
        }
    }
}

/// `M = diag(masses)`, series `K` with spring `k`, Rayleigh `C` tuned to `xi`
/// at the 1-based reference modes (default first and last).
pub fn assemble_matrices(
    masses: &[f64],
    k: f64,
    xi: f64,
    reference_modes: Option<(usize, usize)>,
) -> Result<StructuralMatrices> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::domain(format!(
            "stiffness must be positive, got {k}"
        )));
    }
    assemble_with_stiffness(
        masses,
        series_stiffness(masses.len(), k),
        k,
        xi,
        reference_modes,
    )
}

/// Like [`assemble_matrices`] with an explicit stiffness matrix.
pub fn assemble_with_stiffness(
    masses: &[f64],
    stiffness: RMatrix,
    spring: f64,
    xi: f64,
    reference_modes: Option<(usize, usize)>,
) -> Result<StructuralMatrices> {
    let n = masses.len();
    if n == 0 {
        return Err(Error::domain("structure needs at least one mass"));
    }
    if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::domain(format!("mass must be positive, got {m}")));
    }
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::domain(format!(
            "damping ratio must be in [0, 1), got {xi}"
        )));
    }
    let mass = RMatrix::from_diagonal(&DVector::from_column_slice(masses));
    let modes = solve_eigenmodes(&mass, &stiffness)?;
    let (alpha, beta) = if n == 1 {
        rayleigh_coefficients(xi, modes.omega[0], None)?
    } else {
        let (r1, r2) = reference_modes.unwrap_or((1, n));
        if r1 == 0 || r2 == 0 || r1 > n || r2 > n {
            return Err(Error::domain(format!(
                "reference modes ({r1}, {r2}) out of 1..={n}"
            )));
        }
        rayleigh_coefficients(xi, modes.omega[r1 - 1], Some(modes.omega[r2 - 1]))?
    };
    let damping = &mass * alpha + &stiffness * beta;
    Ok(StructuralMatrices {
        mass,
        stiffness,
        damping,
        spring,
        damping_ratio: xi,
        alpha,
        beta,
    })
}

/// Undamped natural frequencies and max-normalized mode shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenModes {
    /// Ascending, rad/s.
    pub omega: Vec<f64>,
    /// Column `r` is mode `r`; its largest-magnitude entry is exactly `+1`.
    pub shapes: RMatrix,
}

/// Solve `K φ = ω² M φ` for diagonal positive `M` and symmetric `K`.
pub fn solve_eigenmodes(mass: &RMatrix, stiffness: &RMatrix) -> Result<EigenModes> {
    let n = mass.nrows();
    if mass.ncols() != n || stiffness.shape() != (n, n) {
        return Err(Error::domain(
            "mass and stiffness must be square and of equal size",
        ));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && mass[(i, j)] != 0.0 {
                return Err(Error::domain("mass matrix must be diagonal"));
            }
        }
        if mass[(i, i)].is_nan() || mass[(i, i)] <= 0.0 {
            return Err(Error::domain(format!("mass {i} must be positive")));
        }
    }
    let scale = stiffness.amax().max(1.0);
    if asymmetry(stiffness) > SYMMETRY_TOLERANCE * scale {
        return Err(Error::domain(format!(
            "stiffness matrix is not symmetric (max |K_ij - K_ji| = {:e})",
            asymmetry(stiffness)
        )));
    }
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / mass[(i, i)].sqrt()).collect();
    let reduced = RMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * stiffness[(i, j)] * inv_sqrt[j]);
    let eig = symmetric_eigen(&reduced)?;

    let tol = 1e-12 * eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut modes: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    for (r, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -tol {
            return Err(Error::domain(format!(
                "stiffness is not positive semi-definite (eigenvalue {lambda:e})"
            )));
        }
        let mut phi: Vec<f64> = (0..n)
            .map(|i| inv_sqrt[i] * eig.eigenvectors[(i, r)])
            .collect();
        normalize_shape(&mut phi);
        modes.push((lambda.max(0.0).sqrt(), phi));
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lexicographic(&a.1, &b.1)));

    let omega = modes.iter().map(|m| m.0).collect();
    let shapes = RMatrix::from_fn(n, n, |i, r| modes[r].1[i]);
    Ok(EigenModes { omega, shapes })
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Scale so the largest-magnitude entry becomes exactly `+1`; the first such
/// entry wins among near-ties.
fn normalize_shape(phi: &mut [f64]) {
    let peak = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak == 0.0 {
        return;
    }
    let at = phi
        .iter()
        .position(|v| v.abs() >= peak * (1.0 - 1e-12))
        .unwrap_or(0);
    let pivot = phi[at];
    for v in phi.iter_mut() {
        *v /= pivot;
    }
    phi[at] = 1.0;
}

/// Residue scale of mode `r` for a mode shape with modal mass `m_r`:
/// `Q_r = 1 / (2 i ω_d m_r)`.
pub fn residue_scale(damped_omega: f64, modal_mass: f64) -> Complex64 {
    1.0 / (Complex64::new(0.0, 2.0 * damped_omega * modal_mass))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalModel {
    /// Undamped natural angular frequencies, rad/s, ascending.
    pub omega: Vec<f64>,
    /// Natural frequencies in Hz.
    pub frequencies_hz: Vec<f64>,
    pub shapes: RMatrix,
    pub modal_mass: Vec<f64>,
    pub modal_stiffness: Vec<f64>,
    pub modal_damping: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    pub poles: Vec<Complex64>,
    pub residue_scales: Vec<Complex64>,
}

impl ModalModel {
    pub fn damped_omega(&self) -> Vec<f64> {
        self.poles.iter().map(|p| p.im).collect()
    }
}

/// Project `M`, `K`, `C` onto the mode shapes and derive poles and residue scales.
pub fn modal_projection(
    mass: &RMatrix,
    stiffness: &RMatrix,
    damping: &RMatrix,
    modes: &EigenModes,
) -> Result<ModalModel> {
    let phi = &modes.shapes;
    let pm = phi.transpose() * mass * phi;
    let pk = phi.transpose() * stiffness * phi;
    let pc = phi.transpose() * damping * phi;
    for (name, m) in [("mass", &pm), ("stiffness", &pk)] {
        let ratio = off_diagonal_ratio(m);
        if ratio > ORTHOGONALITY_TOLERANCE {
            return Err(Error::domain(format!(
                "modal {name} matrix is not diagonal (off-diagonal share {ratio:e})"
            )));
        }
    }
    let ratio = off_diagonal_ratio(&pc);
    if ratio > PROPORTIONALITY_TOLERANCE {
        return Err(Error::NonProportionalDamping {
            ratio,
            tolerance: PROPORTIONALITY_TOLERANCE,
        });
    }
    let n = phi.ncols();
    let modal_mass: Vec<f64> = (0..n).map(|r| pm[(r, r)]).collect();
    let modal_stiffness: Vec<f64> = (0..n).map(|r| pk[(r, r)]).collect();
    let modal_damping: Vec<f64> = (0..n).map(|r| pc[(r, r)]).collect();
    let mut damping_ratios = Vec::with_capacity(n);
    let mut poles = Vec::with_capacity(n);
    let mut residue_scales = Vec::with_capacity(n);
    for r in 0..n {
        let w = modes.omega[r];
        let xi = if w > 0.0 {
            modal_damping[r] / (2.0 * modal_mass[r] * w)
        } else {
            0.0
        };
        if xi >= 1.0 {
            return Err(Error::domain(format!(
                "mode {} is not underdamped (ratio {xi})",
                r + 1
            )));
        }
        let wd = w * (1.0 - xi * xi).sqrt();
        damping_ratios.push(xi);
        poles.push(Complex64::new(-xi * w, wd));
        residue_scales.push(residue_scale(wd, modal_mass[r]));
    }
    Ok(ModalModel {
        omega: modes.omega.clone(),
        frequencies_hz: modes
            .omega
            .iter()
            .map(|w| w / (2.0 * std::f64::consts::PI))
            .collect(),
        shapes: phi.clone(),
        modal_mass,
        modal_stiffness,
        modal_damping,
        damping_ratios,
        poles,
        residue_scales,
    })
}

/// Eigenmodes plus modal projection of assembled matrices.
pub fn modal_model(m: &StructuralMatrices) -> Result<ModalModel> {
    let modes = solve_eigenmodes(&m.mass, &m.stiffness)?;
    modal_projection(&m.mass, &m.stiffness, &m.damping, &modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrfForm {
    Direct,
    Modal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrfEvaluation {
    /// rad/s
    pub omega: Vec<f64>,
    pub h: Vec<CMatrix>,
}

/// Receptance `H(ω)` on a grid in rad/s.
pub fn frequency_response(
    m: &StructuralMatrices,
    omega: &[f64],
    form: FrfForm,
) -> Result<FrfEvaluation> {
    match form {
        FrfForm::Direct => frf_direct(&m.mass, &m.damping, &m.stiffness, omega),
        FrfForm::Modal => frf_modal(&modal_model(m)?, omega),
    }
}

/// `H(ω) = (K − ω²M + iωC)⁻¹` by LU factorization per grid point.
pub fn frf_direct(
    mass: &RMatrix,
    damping: &RMatrix,
    stiffness: &RMatrix,
    omega: &[f64],
) -> Result<FrfEvaluation> {
    let n = mass.nrows();
    let (mc, cc, kc) = (to_complex(mass), to_complex(damping), to_complex(stiffness));
    let eye = CMatrix::identity(n, n);
    let mut h = Vec::with_capacity(omega.len());
    for &w in omega {
        if !w.is_finite() {
            return Err(Error::domain("frequency grid must be finite"));
        }
        let a = &kc - &mc * Complex64::new(w * w, 0.0) + &cc * Complex64::new(0.0, w);
        let scale = a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let lu = a.lu();
        let u = lu.u();
        let pivot = (0..n).fold(f64::INFINITY, |acc, i| acc.min(u[(i, i)].norm()));
        if pivot.is_nan() || pivot <= 1e-13 * scale {
            return Err(Error::Resonance { omega: w });
        }
        let inv = lu.solve(&eye).ok_or(Error::Resonance { omega: w })?;
        h.push(inv);
    }
    Ok(FrfEvaluation {
        omega: omega.to_vec(),
        h,
    })
}

/// `H(ω) = Σ_r φ_r φ_rᵀ [Q_r / (iω − λ_r) + Q_r* / (iω − λ_r*)]`.
pub fn frf_modal(model: &ModalModel, omega: &[f64]) -> Result<FrfEvaluation> {
    let n = model.shapes.nrows();
    let mut h = Vec::with_capacity(omega.len());
    for &w in omega {
        if !w.is_finite() {
            return Err(Error::domain("frequency grid must be finite"));
        }
        let s = Complex64::new(0.0, w);
        let mut hw = CMatrix::zeros(n, n);
        for (r, (&pole, &q)) in model.poles.iter().zip(&model.residue_scales).enumerate() {
            if pole.re == 0.0 && (w.abs() - pole.im).abs() <= 1e-6 * pole.im {
                return Err(Error::Resonance { omega: w });
            }
            let coef = q / (s - pole) + q.conj() / (s - pole.conj());
            for i in 0..n {
                for j in 0..n {
                    hw[(i, j)] += coef * (model.shapes[(i, r)] * model.shapes[(j, r)]);
                }
            }
        }
        h.push(hw);
    }
    Ok(FrfEvaluation {
        omega: omega.to_vec(),
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_pattern() {
        let k = series_stiffness(3, 1.0);
        assert_eq!(
            k,
            RMatrix::from_row_slice(3, 3, &[2., -1., 0., -1., 2., -1., 0., -1., 2.])
        );
        assert_eq!(chain_stiffness(&[1.0; 4]), k);
    }

    #[test]
    fn mass_matrix_is_diagonal() {
        let s = assemble_matrices(&[2.0, 2.0], 1.0, 0.02, None).unwrap();
        assert_eq!(s.mass, RMatrix::from_row_slice(2, 2, &[2., 0., 0., 2.]));
    }

    #[test]
    fn single_dof_damping_is_critical_fraction() {
        // K = 2k for the grounded single mass, so ω = sqrt(2) and c = 2 ξ ω m.
        let s = assemble_matrices(&[1.0], 1.0, 0.02, None).unwrap();
        assert!((s.damping[(0, 0)] - 2.0 * 0.02 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.alpha, 0.0);
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(assemble_matrices(&[1.0], 0.0, 0.02, None).is_err());
        assert!(assemble_matrices(&[1.0, -1.0], 1.0, 0.02, None).is_err());
        assert!(assemble_matrices(&[1.0], 1.0, 1.0, None).is_err());
    }

    #[test]
    fn two_dof_eigenvalues() {
        let m = RMatrix::identity(2, 2);
        let e = solve_eigenmodes(&m, &series_stiffness(2, 1.0)).unwrap();
        assert!((e.omega[0].powi(2) - 1.0).abs() < 1e-14);
        assert!((e.omega[1].powi(2) - 3.0).abs() < 1e-14);
        for r in 0..2 {
            assert_eq!(e.shapes.column(r).amax(), 1.0);
        }
    }

    #[test]
    fn scalar_eigenproblem() {
        let m = RMatrix::from_element(1, 1, 3.0);
        let e = solve_eigenmodes(&m, &(&m * 4.0)).unwrap();
        assert!((e.omega[0] - 2.0).abs() < 1e-15);
        assert_eq!(e.shapes[(0, 0)], 1.0);
    }

    #[test]
    fn asymmetric_stiffness_rejected() {
        let k = RMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.1, 2.0]);
        assert!(solve_eigenmodes(&RMatrix::identity(2, 2), &k).is_err());
    }

    #[test]
    fn undamped_poles_are_imaginary() {
        let s = assemble_matrices(&[1.0, 1.0], 1.0, 0.0, None).unwrap();
        let model = modal_model(&s).unwrap();
        assert!(model.poles.iter().all(|p| p.re == 0.0));
        for r in 0..2 {
            let expect = [1.0, 3.0][r] * model.modal_mass[r];
            assert!((model.modal_stiffness[r] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rayleigh_projection_per_mode() {
        let s = assemble_matrices(&[1.0, 2.0, 1.5], 3.0, 0.05, None).unwrap();
        let model = modal_model(&s).unwrap();
        for r in 0..3 {
            let expect = s.alpha * model.modal_mass[r] + s.beta * model.modal_stiffness[r];
            assert!((model.modal_damping[r] - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
        assert!((model.damping_ratios[0] - 0.05).abs() < 1e-12);
        assert!((model.damping_ratios[2] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn non_proportional_damping_rejected() {
        let mut s = assemble_matrices(&[1.0, 1.0, 1.0], 1.0, 0.02, None).unwrap();
        s.damping[(0, 0)] += 0.5;
        assert!(matches!(
            modal_model(&s),
            Err(Error::NonProportionalDamping { .. })
        ));
    }

    #[test]
    fn static_compliance() {
        let s = assemble_matrices(&[1.0], 5.0, 0.02, None).unwrap();
        let h = frequency_response(&s, &[0.0], FrfForm::Direct).unwrap();
        assert!((h.h[0][(0, 0)] - Complex64::new(1.0 / 10.0, 0.0)).norm() < 1e-15);
        let h = frequency_response(&s, &[0.0], FrfForm::Modal).unwrap();
        assert!((h.h[0][(0, 0)] - Complex64::new(1.0 / 10.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn undamped_resonance_is_error() {
        let s = assemble_matrices(&[1.0], 0.5, 0.0, None).unwrap();
        assert!(matches!(
            frequency_response(&s, &[1.0], FrfForm::Direct),
            Err(Error::Resonance { .. })
        ));
        assert!(matches!(
            frequency_response(&s, &[1.0], FrfForm::Modal),
            Err(Error::Resonance { .. })
        ));
    }
}
