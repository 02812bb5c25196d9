//! Monte Carlo checks of the linearised degree and clustering estimates:
//! pullback ellipses of the ε-ball, galaxy sets, expected ellipse overlaps and
//! the cost of rotating singular vectors.

mod ellipse;
mod galaxy;
mod overlap;

use crate::error::{Error, Result};

pub use ellipse::{axis_aligned_family, ellipse_union_area_mc, pullback_ellipses, Ellipse2D};
pub use galaxy::{galaxy_volume_mc, FlowPropagator, GalaxyEstimate, GalaxySpec, MapPropagator, Propagator};
pub use overlap::{circle_overlap_constant, expected_overlap_mc, DEFAULT_INNER_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// `scale * p` with `p = hits / samples` and binomial standard error.
    pub fn from_hits(hits: u64, samples: usize, scale: f64, seed: u64) -> Self {
        let p = hits as f64 / samples as f64;
        Self {
            value: scale * p,
            std_error: scale * (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            seed,
        }
    }
}

/// `(pi + 2 ln sigma_T) eps^2`, the area swept by the pullbacks of an ε-disc
/// stretched monotonically up to `sigma_T` along one fixed direction.
pub fn vol_galaxy_formula(sigma_t: f64, epsilon: f64) -> Result<f64> {
    if !(sigma_t >= 1.0) || !sigma_t.is_finite() {
        return Err(Error::Domain(format!("sigma must be >= 1, got {sigma_t}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok((std::f64::consts::PI + 2.0 * sigma_t.ln()) * epsilon * epsilon)
}

/// Off-diagonal Jacobian magnitude `omega sigma1^2` needed to turn the right
/// singular frame of `W` at angular speed `omega`.
pub fn rotation_cost(sigma1: f64, omega: f64) -> Result<f64> {
    if !(sigma1 >= 1.0) {
        return Err(Error::Domain(format!("sigma1 must be >= 1, got {sigma1}")));
    }
    Ok(omega * sigma1 * sigma1)
}

/// One sample of [`rotation_cost_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSample {
    pub t: f64,
    pub predicted: f64,
    /// Entry `(1, 2)` of `dW/dt W^{-1}` by central differences.
    pub measured: f64,
}

/// Build `W(t) = diag(s(t), 1/s(t)) R(theta(t))^T` and compare the `(1, 2)`
/// entry of `dW/dt W^{-1}` with `theta'(t) s(t)^2`.
pub fn rotation_cost_sweep<S, A, O>(sigma: S, theta: A, omega: O, times: &[f64], h: f64) -> Result<Vec<RotationSample>>
where
    S: Fn(f64) -> f64,
    A: Fn(f64) -> f64,
    O: Fn(f64) -> f64,
{
    use crate::linalg::{inv2, Mat2};
    let w = |t: f64| -> Mat2 {
        let s = sigma(t);
        let (sn, cs) = theta(t).sin_cos();
        // diag(s, 1/s) times the transpose of [[cs, -sn], [sn, cs]].
        [[s * cs, s * sn], [-sn / s, cs / s]]
    };
    times
        .iter()
        .map(|&t| {
            let (p, m) = (w(t + h), w(t - h));
            let dw = [
                [(p[0][0] - m[0][0]) / (2.0 * h), (p[0][1] - m[0][1]) / (2.0 * h)],
                [(p[1][0] - m[1][0]) / (2.0 * h), (p[1][1] - m[1][1]) / (2.0 * h)],
            ];
            let inv = inv2(&w(t)).ok_or_else(|| Error::Degenerate(format!("W({t}) is singular")))?;
            let measured = dw[0][0] * inv[0][1] + dw[0][1] * inv[1][1];
            Ok(RotationSample {
                t,
                predicted: rotation_cost(sigma(t), omega(t))?,
                measured,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn formula_values() {
        assert!((vol_galaxy_formula(1.0, 0.2).unwrap() - PI * 0.04).abs() < 1e-15);
        assert!((vol_galaxy_formula(E, 1.0).unwrap() - (PI + 2.0)).abs() < 1e-14);
        assert!(vol_galaxy_formula(0.9, 1.0).is_err());
    }

    #[test]
    fn formula_splits_into_three_parts() {
        for s in [1.0f64, 2.0, 7.5, 100.0] {
            let eps: f64 = 0.3;
            let parts = 4.0 * ((PI + 2.0) / 8.0 + s.ln() / 2.0 + (PI - 2.0) / 8.0) * eps * eps;
            assert!((parts - vol_galaxy_formula(s, eps).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_cost_values() {
        assert_eq!(rotation_cost(1.0, 0.7).unwrap(), 0.7);
        assert_eq!(rotation_cost(10.0, 1.0).unwrap(), 100.0);
        assert!(rotation_cost(0.5, 1.0).is_err());
    }

    #[test]
    fn rotation_sweep_agrees() {
        let times: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
        let out = rotation_cost_sweep(
            |t| 1.0 + 2.0 * t,
            |t| 0.3 * t + 0.2 * (2.0 * t).sin(),
            |t| 0.3 + 0.4 * (2.0 * t).cos(),
            &times,
            1e-5,
        )
        .unwrap();
        for s in out {
            assert!((s.measured - s.predicted).abs() < 1e-6, "{s:?}");
        }
    }
}
