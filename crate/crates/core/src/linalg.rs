//! Closed-form 2x2 helpers used on hot paths.

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn det2(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inv2(a: &Mat2) -> Option<Mat2> {
    let d = det2(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

/// Singular values and the first right singular vector of a 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd2 {
    pub sigma1: f64,
    pub sigma2: f64,
    /// Orientation of the first right singular vector, in `(-pi/2, pi/2]`.
    pub angle: f64,
}

pub fn svd2(m: &Mat2) -> Svd2 {
    // Eigen-decomposition of M^T M = [[a, b], [b, c]].
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let half_sum = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let sigma1 = (half_sum + radius).sqrt();
    let sigma2 = if sigma1 > 0.0 { det2(m).abs() / sigma1 } else { 0.0 };
    Svd2 {
        sigma1,
        sigma2,
        angle: 0.5 * (2.0 * b).atan2(a - c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    #[test]
    fn matches_nalgebra() {
        let cases: [Mat2; 4] = [
            [[2.0, 1.0], [0.5, 3.0]],
            [[-1.0, 4.0], [2.0, 0.1]],
            [[1e4, 3.0], [2.0, 1e-4]],
            [[0.0, 1.0], [-1.0, 0.0]],
        ];
        for m in cases {
            let s = svd2(&m);
            let n = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
            let sv = n.singular_values();
            let (hi, lo) = (sv.max(), sv.min());
            assert!((s.sigma1 - hi).abs() <= 1e-12 * hi, "{m:?}");
            assert!((s.sigma2 - lo).abs() <= 1e-9 * hi.max(1.0), "{m:?}");
            // Right singular vector: |M v| = sigma1.
            let v = [s.angle.cos(), s.angle.sin()];
            let mv = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            assert!((mv[0].hypot(mv[1]) - hi).abs() <= 1e-9 * hi, "{m:?}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = [[2.0, 1.0], [0.5, 3.0]];
        let p = mul2(&m, &inv2(&m).unwrap());
        for (i, row) in p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v - IDENTITY2[i][j]).abs() < 1e-14);
            }
        }
        assert!(inv2(&[[1.0, 2.0], [2.0, 4.0]]).is_none());
    }
}
