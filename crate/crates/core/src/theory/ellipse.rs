use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use super::MCEstimate;
use crate::error::{Error, Result};
use crate::flows::FundamentalPath;
use crate::linalg::svd2;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse2D {
    pub center: [f64; 2],
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Orientation of the major axis in `[0, pi)`.
    pub angle: f64,
    // Quadratic form coefficients of `(p - c)^T Q (p - c) < 1`.
    q: [f64; 3],
}

impl Ellipse2D {
    pub fn new(center: [f64; 2], semi_major: f64, semi_minor: f64, angle: f64) -> Result<Self> {
        if !(semi_minor > 0.0) || !(semi_major >= semi_minor) || !semi_major.is_finite() {
            return Err(Error::Domain(format!(
                "ellipse needs a >= b > 0, got a = {semi_major}, b = {semi_minor}"
            )));
        }
        let angle = angle.rem_euclid(PI) % PI;
        let (s, c) = angle.sin_cos();
        let (ia, ib) = (1.0 / (semi_major * semi_major), 1.0 / (semi_minor * semi_minor));
        Ok(Self {
            center,
            semi_major,
            semi_minor,
            angle,
            q: [c * c * ia + s * s * ib, c * s * (ia - ib), s * s * ia + c * c * ib],
        })
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        Self::new(center, radius, radius, 0.0)
    }

    pub fn area(&self) -> f64 {
        PI * self.semi_major * self.semi_minor
    }

    /// Open-set membership.
    #[inline]
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (x, y) = (p[0] - self.center[0], p[1] - self.center[1]);
        self.q[0] * x * x + 2.0 * self.q[1] * x * y + self.q[2] * y * y < 1.0
    }

    /// Axis-aligned bounding box `[(xmin, xmax), (ymin, ymax)]`.
    pub fn bounding_box(&self) -> [(f64, f64); 2] {
        let (s, c) = self.angle.sin_cos();
        let (a, b) = (self.semi_major, self.semi_minor);
        let hx = (a * a * c * c + b * b * s * s).sqrt();
        let hy = (a * a * s * s + b * b * c * c).sqrt();
        [
            (self.center[0] - hx, self.center[0] + hx),
            (self.center[1] - hy, self.center[1] + hy),
        ]
    }
}

/// Linearised pullbacks `W(t0, t)^{-1} B_eps(0)` of the ε-ball, one per
/// sample of `path`, centred at the origin.
pub fn pullback_ellipses(path: &FundamentalPath, epsilon: f64) -> Result<Vec<Ellipse2D>> {
    if path.dim() != 2 {
        return Err(Error::Shape(format!(
            "pullback ellipses need 2x2 matrices, got {0}x{0}",
            path.dim()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    path.matrices()
        .iter()
        .map(|w| {
            let sv = svd2(&[[w[(0, 0)], w[(0, 1)]], [w[(1, 0)], w[(1, 1)]]]);
            if !(sv.sigma2 > 0.0) {
                return Err(Error::Degenerate("singular fundamental matrix".into()));
            }
            // W^{-1} = V diag(1/s1, 1/s2) U^T: the long axis lies along the
            // second right singular vector.
            Ellipse2D::new([0.0; 2], epsilon / sv.sigma2, epsilon / sv.sigma1, sv.angle + PI / 2.0)
        })
        .collect()
}

/// Pullbacks of `diag(s, 1/s)` for `s` geometrically spaced on
/// `[1, sigma_max]`: the idealised family of a single stretching direction.
pub fn axis_aligned_family(sigma_max: f64, epsilon: f64, steps: usize) -> Result<Vec<Ellipse2D>> {
    if !(sigma_max >= 1.0) || steps < 1 {
        return Err(Error::Domain(format!(
            "need sigma_max >= 1 and steps >= 1, got {sigma_max}, {steps}"
        )));
    }
    (0..steps)
        .map(|k| {
            let s = if steps == 1 {
                sigma_max
            } else {
                sigma_max.powf(k as f64 / (steps - 1) as f64)
            };
            Ellipse2D::new([0.0; 2], epsilon * s, epsilon / s, PI / 2.0)
        })
        .collect()
}

fn dedup(ellipses: &[Ellipse2D]) -> Vec<Ellipse2D> {
    let key = |e: &Ellipse2D| {
        [e.center[0], e.center[1], e.semi_major, e.semi_minor, e.angle].map(|v| (v * 1e12).round() as i64)
    };
    let mut seen = std::collections::HashSet::new();
    ellipses.iter().filter(|e| seen.insert(key(e))).copied().collect()
}

/// Area of the union by uniform rejection sampling over its bounding box.
pub fn ellipse_union_area_mc(ellipses: &[Ellipse2D], samples: usize, seed: u64) -> Result<MCEstimate> {
    if ellipses.is_empty() {
        return Err(Error::Domain("no ellipses".into()));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let set = dedup(ellipses);
    let mut bb = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for e in &set {
        for (acc, r) in bb.iter_mut().zip(e.bounding_box()) {
            acc.0 = acc.0.min(r.0);
            acc.1 = acc.1.max(r.1);
        }
    }
    let hits: u64 = rng::chunks(samples)
        .into_par_iter()
        .map(|(id, count)| {
            let mut r = rng::stream(seed, id);
            let mut h = 0u64;
            for _ in 0..count {
                let p = [r.random_range(bb[0].0..bb[0].1), r.random_range(bb[1].0..bb[1].1)];
                if set.iter().any(|e| e.contains(p)) {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let box_area = (bb[0].1 - bb[0].0) * (bb[1].1 - bb[1].0);
    Ok(MCEstimate::from_hits(hits, samples, box_area, seed))
}
