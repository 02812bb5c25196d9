use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use super::{Ellipse2D, MCEstimate};
use crate::error::{Error, Result};
use crate::rng;

/// Inner samples per configuration in [`expected_overlap_mc`].
pub const DEFAULT_INNER_SAMPLES: usize = 16;

/// Uniform point in the unit disc.
fn in_disc<R: Rng>(r: &mut R) -> [f64; 2] {
    loop {
        let p = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        if p[0] * p[0] + p[1] * p[1] < 1.0 {
            return p;
        }
    }
}

/// Expected relative overlap `E[vol(E1 ∩ E2) / vol(E1)]` of two ellipses with
/// semi-axes `(sigma, 1/sigma)`, where the centre of `E2` is uniform in `E1`
/// and `E2` is rotated against `E1` by an angle uniform on
/// `[-max_angle, max_angle]`.
///
/// Each of the `samples` configurations contributes the fraction of `inner`
/// uniform points of `E1` that fall in `E2`; the standard error is that of the
/// mean of these fractions.
pub fn expected_overlap_mc(sigma: f64, max_angle: f64, samples: usize, inner: usize, seed: u64) -> Result<MCEstimate> {
    if !(sigma >= 1.0) || !(max_angle >= 0.0) {
        return Err(Error::Domain(format!(
            "need sigma >= 1 and max_angle >= 0, got {sigma}, {max_angle}"
        )));
    }
    if samples < 2 || inner == 0 {
        return Err(Error::Domain(
            "need at least two configurations and one inner sample".into(),
        ));
    }
    let (a, b) = (sigma, 1.0 / sigma);
    let sums: (f64, f64) = rng::chunks(samples)
        .into_par_iter()
        .map(|(id, count)| {
            let mut r = rng::stream(seed, id);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let c = in_disc(&mut r);
                let phi = if max_angle > 0.0 {
                    r.random_range(-max_angle..=max_angle)
                } else {
                    0.0
                };
                let e2 = Ellipse2D::new([a * c[0], b * c[1]], a, b, phi).expect("valid semi-axes");
                let mut hit = 0usize;
                for _ in 0..inner {
                    let p = in_disc(&mut r);
                    if e2.contains([a * p[0], b * p[1]]) {
                        hit += 1;
                    }
                }
                let f = hit as f64 / inner as f64;
                s1 += f;
                s2 += f * f;
            }
            (s1, s2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let n = samples as f64;
    let mean = sums.0 / n;
    let var = ((sums.1 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MCEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        samples,
        seed,
    })
}

/// Expected relative overlap of two unit discs whose centres are a uniform
/// distance apart inside one of them.
pub fn circle_overlap_constant() -> f64 {
    1.0 - 3.0 * 3f64.sqrt() / (4.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_value() {
        assert!((circle_overlap_constant() - 0.586503).abs() < 1e-6);
    }

    #[test]
    fn circle_matches_constant() {
        let est = expected_overlap_mc(1.0, 0.3, 100_000, 16, 2).unwrap();
        assert!(
            (est.value - circle_overlap_constant()).abs() < 3.0 * est.std_error,
            "{est:?}"
        );
    }

    #[test]
    fn zero_angle_is_sigma_invariant() {
        let a = expected_overlap_mc(1.0, 0.0, 20_000, 8, 4).unwrap();
        let b = expected_overlap_mc(7.0, 0.0, 20_000, 8, 4).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
    }

    #[test]
    fn rotation_reduces_overlap_of_elongated_ellipses() {
        let flat = expected_overlap_mc(4.0, 0.0, 20_000, 16, 6).unwrap();
        let turned = expected_overlap_mc(4.0, PI / 8.0, 20_000, 16, 6).unwrap();
        assert!(turned.value < flat.value - 3.0 * (flat.std_error + turned.std_error));
    }

    #[test]
    fn invalid_arguments() {
        assert!(expected_overlap_mc(0.5, 0.0, 100, 4, 0).is_err());
        assert!(expected_overlap_mc(1.0, -0.1, 100, 4, 0).is_err());
    }
}
