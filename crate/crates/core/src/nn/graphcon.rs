//! Graph-coupled oscillator update (GraphCON) around an arbitrary graph layer.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConConfig {
    pub dt: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Drop probability in training mode.
    pub dropout: f64,
}

impl GraphConConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "GraphCON step size must be positive, got {}",
                self.dt
            )));
        }
        if !(self.alpha.is_finite() && self.gamma.is_finite()) {
            return Err(Error::Config("GraphCON coefficients must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

fn dropout(m: &mut RMatrix, p: f64, rng: &mut impl Rng) {
    let keep = 1.0 - p;
    for v in m.iter_mut() {
        *v = if rng.gen::<f64>() < p { 0.0 } else { *v / keep };
    }
}

/// One explicit step:
/// `Y' = Y + dt (ReLU(F(X)) − αY − γX)`, `X' = X + dt Y'`.
///
/// With `training` set, inverted dropout is applied to both new states.
pub fn graphcon_step<F, R>(
    x: &RMatrix,
    y: &RMatrix,
    layer: F,
    cfg: &GraphConConfig,
    training: Option<&mut R>,
) -> Result<(RMatrix, RMatrix)>
where
    F: FnOnce(&RMatrix) -> Result<RMatrix>,
    R: Rng,
{
    cfg.validate()?;
    if x.shape() != y.shape() {
        return Err(Error::domain(
            "GraphCON position and velocity differ in shape",
        ));
    }
    let f = layer(x)?;
    if f.shape() != x.shape() {
        return Err(Error::domain(
            "GraphCON layer must preserve the feature shape",
        ));
    }
    let drive = f.map(|v| v.max(0.0));
    let mut y_next = y + (drive - y * cfg.alpha - x * cfg.gamma) * cfg.dt;
    let mut x_next = x + &y_next * cfg.dt;
    if let Some(rng) = training {
        if cfg.dropout > 0.0 {
            dropout(&mut x_next, cfg.dropout, rng);
            dropout(&mut y_next, cfg.dropout, rng);
        }
    }
    Ok((x_next, y_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CFG: GraphConConfig = GraphConConfig {
        dt: 0.1,
        alpha: 1.0,
        gamma: 1.0,
        dropout: 0.5,
    };

    #[test]
    fn scalar_step() {
        // F(x) = 2x, x = 1, y = 0.5:
        // y' = 0.5 + 0.1 (2 - 0.5 - 1) = 0.55, x' = 1 + 0.055
        let x = RMatrix::from_element(1, 1, 1.0);
        let y = RMatrix::from_element(1, 1, 0.5);
        let (xn, yn) =
            graphcon_step(&x, &y, |x| Ok(x * 2.0), &CFG, None::<&mut ChaCha8Rng>).unwrap();
        assert!((yn[(0, 0)] - 0.55).abs() < 1e-15);
        assert!((xn[(0, 0)] - 1.055).abs() < 1e-15);
    }

    #[test]
    fn rest_state_is_fixed_point() {
        let z = RMatrix::zeros(3, 2);
        let (xn, yn) =
            graphcon_step(&z, &z, |x| Ok(x.clone()), &CFG, None::<&mut ChaCha8Rng>).unwrap();
        assert_eq!(xn, z);
        assert_eq!(yn, z);
    }

    #[test]
    fn inference_is_deterministic_and_training_drops() {
        let x = RMatrix::from_element(4, 4, 1.0);
        let y = RMatrix::from_element(4, 4, 1.0);
        let a = graphcon_step(&x, &y, |x| Ok(x.clone()), &CFG, None::<&mut ChaCha8Rng>).unwrap();
        let b = graphcon_step(&x, &y, |x| Ok(x.clone()), &CFG, None::<&mut ChaCha8Rng>).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (xt, _) = graphcon_step(&x, &y, |x| Ok(x.clone()), &CFG, Some(&mut rng)).unwrap();
        assert!(xt.iter().any(|v| *v == 0.0));
    }

    #[test]
    fn non_positive_step_rejected() {
        let z = RMatrix::zeros(1, 1);
        for dt in [0.0, -0.1] {
            let cfg = GraphConConfig { dt, ..CFG };
            assert!(
                graphcon_step(&z, &z, |x| Ok(x.clone()), &cfg, None::<&mut ChaCha8Rng>).is_err()
            );
        }
    }
}
