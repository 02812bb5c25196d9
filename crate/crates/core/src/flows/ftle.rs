//! Finite-time Lyapunov exponents and singular-value histories of the
//! fundamental matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::field::{GridSpec, ScalarField};
use super::integrate::integrate_variational;
use super::Flow;
use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{det2, inv2, mul2, svd2, Mat2};

/// Fundamental matrices `W(t0, t)` along one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalPath {
    times: Vec<f64>,
    matrices: Vec<DMatrix<f64>>,
}

impl FundamentalPath {
    pub fn new(times: Vec<f64>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != matrices.len() {
            return Err(Error::Shape(format!(
                "{} times but {} matrices",
                times.len(),
                matrices.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("times must be strictly increasing".into()));
        }
        let d = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Shape("matrices must all be square of one size".into()));
        }
        if matrices[0] != DMatrix::identity(d, d) {
            return Err(Error::Domain("first matrix must be the identity".into()));
        }
        Ok(Self { times, matrices })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_interval(s: f64, t: f64) -> Result<f64> {
    let span = (t - s).abs();
    if !(span > 0.0) {
        return Err(Error::Domain(format!("FTLE needs t != s, got s = t = {s}")));
    }
    Ok(span)
}

fn ftle_2x2(w: &Mat2, span: f64) -> Result<f64> {
    let sv = svd2(w);
    if !(sv.sigma2 > 0.0) || !sv.sigma1.is_finite() {
        return Err(Error::Degenerate(format!("singular flow-map gradient {w:?}")));
    }
    Ok(sv.sigma1.ln() / span)
}

/// `ln(sigma_1(W)) / |t - s|`.
pub fn ftle_from_w(w: &DMatrix<f64>, s: f64, t: f64) -> Result<f64> {
    let span = check_interval(s, t)?;
    if w.nrows() != w.ncols() {
        return Err(Error::Shape(format!(
            "{}x{} matrix is not square",
            w.nrows(),
            w.ncols()
        )));
    }
    if w.nrows() == 2 {
        return ftle_2x2(&[[w[(0, 0)], w[(0, 1)]], [w[(1, 0)], w[(1, 1)]]], span);
    }
    let sv = w.singular_values();
    if !(sv.min() > 0.0) {
        return Err(Error::Degenerate("singular flow-map gradient".into()));
    }
    Ok(sv.max().ln() / span)
}

/// Flow-map gradient at grid node `i`: central differences in the interior,
/// one-sided on the boundary.
fn flow_map_gradient(ens: &TrajectoryEnsemble, grid: &GridSpec, t: usize, i: usize) -> DMatrix<f64> {
    let d = grid.ndim();
    let idx = grid.multi_index(i);
    let mut g = DMatrix::zeros(d, d);
    for c in 0..d {
        let n = grid.shape()[c];
        let stride = grid.stride(c);
        let k = idx[c];
        let (lo, hi) = (
            if k > 0 { i - stride } else { i },
            if k + 1 < n { i + stride } else { i },
        );
        let span = (hi - lo) / stride;
        let h = span as f64 * grid.spacing()[c];
        let (a, b) = (ens.point(t, lo), ens.point(t, hi));
        for r in 0..d {
            g[(r, c)] = (b[r] - a[r]) / h;
        }
    }
    g
}

fn stretching_rate(g: &DMatrix<f64>, span: f64, node: usize) -> Result<f64> {
    let sigma1 = if g.nrows() == 2 {
        svd2(&[[g[(0, 0)], g[(0, 1)]], [g[(1, 0)], g[(1, 1)]]]).sigma1
    } else {
        g.singular_values().max()
    };
    if !(sigma1 > 0.0) || !sigma1.is_finite() {
        return Err(Error::Degenerate(format!("flow-map gradient at node {node} vanishes")));
    }
    Ok(sigma1.ln() / span)
}

/// FTLE field over `[t_index_start, t_index_end]` from the discrete flow map
/// of a grid-seeded ensemble. The initial slice must be laid out as `grid`.
pub fn ftle_field_fd(
    ens: &TrajectoryEnsemble,
    grid: &GridSpec,
    t_index_start: usize,
    t_index_end: usize,
) -> Result<ScalarField> {
    if grid.len() != ens.n_traj() || grid.ndim() != ens.dim() {
        return Err(Error::Shape(format!(
            "grid {:?} does not match ensemble of {} trajectories in {} dimensions",
            grid.shape(),
            ens.n_traj(),
            ens.dim()
        )));
    }
    if grid.shape().iter().any(|&s| s < 2) {
        return Err(Error::Shape(format!(
            "grid {:?} needs at least two nodes per axis",
            grid.shape()
        )));
    }
    if t_index_start >= ens.n_times() || t_index_end >= ens.n_times() {
        return Err(Error::Domain(format!(
            "time indices {t_index_start}, {t_index_end} out of range for {} slices",
            ens.n_times()
        )));
    }
    let span = check_interval(ens.times()[t_index_start], ens.times()[t_index_end])?;
    let d = grid.ndim();
    let values: Vec<Result<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let end = flow_map_gradient(ens, grid, t_index_end, i);
            if t_index_start == 0 {
                // Only the stretching is needed here; discrete gradients on
                // invariant boundaries may be exactly rank deficient.
                return stretching_rate(&end, span, i);
            }
            let start = flow_map_gradient(ens, grid, t_index_start, i);
            if d == 2 {
                let m = |g: &DMatrix<f64>| [[g[(0, 0)], g[(0, 1)]], [g[(1, 0)], g[(1, 1)]]];
                let inv =
                    inv2(&m(&start)).ok_or_else(|| Error::Degenerate(format!("singular gradient at node {i}")))?;
                return ftle_2x2(&mul2(&m(&end), &inv), span);
            }
            let inv = start
                .try_inverse()
                .ok_or_else(|| Error::Degenerate(format!("singular gradient at node {i}")))?;
            ftle_from_w(&(end * inv), 0.0, span)
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid.clone(), values)
}

/// FTLE field from the variational equation integrated at every grid node.
pub fn ftle_field_variational<F: Flow>(flow: &F, grid: &GridSpec, t0: f64, t1: f64, dt: f64) -> Result<ScalarField> {
    if grid.ndim() != flow.dim() {
        return Err(Error::Shape(format!(
            "{}-dimensional grid for a {}-dimensional flow",
            grid.ndim(),
            flow.dim()
        )));
    }
    let values: Vec<Result<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (_, path) = integrate_variational(
                |t, x, o: &mut [f64]| flow.velocity(t, x, o),
                |t, x, o: &mut [f64]| flow.jacobian(t, x, o),
                &grid.coords(i),
                t0,
                t1,
                dt,
            )?;
            ftle_from_w(path.matrices().last().unwrap(), t0, t1)
        })
        .collect();
    ScalarField::new(grid.clone(), values.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Per-sample singular values and first right singular vector orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularHistory {
    pub times: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Orientation modulo pi, in `[0, pi)`.
    pub theta: Vec<f64>,
    /// `theta` shifted by multiples of pi so consecutive samples differ by at
    /// most pi/2.
    pub theta_unwrapped: Vec<f64>,
}

/// Relative gap below which the two singular values count as equal.
const TIE_TOL: f64 = 1e-9;

pub fn singular_history(path: &FundamentalPath) -> Result<SingularHistory> {
    if path.dim() != 2 {
        return Err(Error::Shape(format!(
            "singular history needs 2x2 matrices, got {0}x{0}",
            path.dim()
        )));
    }
    let n = path.len();
    let mut h = SingularHistory {
        times: path.times().to_vec(),
        sigma1: Vec::with_capacity(n),
        sigma2: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
        theta_unwrapped: Vec::with_capacity(n),
    };
    let mut prev = 0.0;
    let mut prev_unwrapped = 0.0;
    for w in path.matrices() {
        let m = [[w[(0, 0)], w[(0, 1)]], [w[(1, 0)], w[(1, 1)]]];
        let sv = svd2(&m);
        let theta = if sv.sigma1 - sv.sigma2 <= TIE_TOL * sv.sigma1 {
            prev
        } else {
            sv.angle.rem_euclid(PI) % PI
        };
        let mut step = theta - prev;
        step -= PI * (step / PI).round();
        let unwrapped = if h.theta.is_empty() {
            theta
        } else {
            prev_unwrapped + step
        };
        h.sigma1.push(sv.sigma1);
        h.sigma2.push(det2(&m).abs() / sv.sigma1);
        h.theta.push(theta);
        h.theta_unwrapped.push(unwrapped);
        prev = theta;
        prev_unwrapped = unwrapped;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{LinearSaddle, StaticFlow};

    fn diag(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }

    #[test]
    fn identity_has_zero_exponent() {
        assert_eq!(ftle_from_w(&DMatrix::identity(2, 2), 0.0, 3.0).unwrap(), 0.0);
        assert_eq!(ftle_from_w(&DMatrix::identity(3, 3), 0.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn saddle_exponent() {
        let (lambda, t): (f64, f64) = (0.7, 2.0);
        let w = diag((lambda * t).exp(), (-lambda * t).exp());
        assert!((ftle_from_w(&w, 0.0, t).unwrap() - lambda).abs() < 1e-14);
    }

    #[test]
    fn rotation_has_zero_exponent() {
        for a in [0.3, 1.2, 2.9] {
            let (s, c) = f64::sin_cos(a);
            let w = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            assert!(ftle_from_w(&w, 1.0, 0.0).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_and_zero_interval() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(ftle_from_w(&w, 0.0, 1.0), Err(Error::Degenerate(_))));
        assert!(matches!(
            ftle_from_w(&DMatrix::identity(2, 2), 1.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    fn grid_ensemble(flow: &dyn Fn(&[f64], f64) -> Vec<f64>, grid: &GridSpec, times: &[f64]) -> TrajectoryEnsemble {
        let mut pos = Vec::new();
        for &t in times {
            for i in 0..grid.len() {
                pos.extend(flow(&grid.coords(i), t));
            }
        }
        TrajectoryEnsemble::new(grid.len(), 2, times.to_vec(), pos).unwrap()
    }

    #[test]
    fn static_ensemble_gives_zero_field() {
        let grid = GridSpec::new(vec![6, 4], vec![0.0, 0.0], vec![0.2, 0.3]);
        let ens = grid_ensemble(&|x, _| x.to_vec(), &grid, &[0.0, 1.0, 2.0]);
        let f = ftle_field_fd(&ens, &grid, 0, 2).unwrap();
        assert!(f.values().iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn saddle_grid_matches_rate() {
        let grid = GridSpec::new(vec![11, 11], vec![-1.0, -1.0], vec![0.2, 0.2]);
        let lambda = 0.5;
        let ens = grid_ensemble(
            &|x, t| vec![x[0] * (lambda * t).exp(), x[1] * (-lambda * t).exp()],
            &grid,
            &[0.0, 1.0, 2.0],
        );
        for (s, e) in [(0, 2), (1, 2), (0, 1)] {
            let f = ftle_field_fd(&ens, &grid, s, e).unwrap();
            assert!(f.values().iter().all(|&v| (v - lambda).abs() < 1e-12));
        }
        // Backward interval uses |t - s|.
        let back = ftle_field_fd(&ens, &grid, 2, 0).unwrap();
        assert!(back.values().iter().all(|&v| (v - lambda).abs() < 1e-12));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let grid = GridSpec::new(vec![3, 3], vec![0.0, 0.0], vec![1.0, 1.0]);
        let ens = grid_ensemble(&|x, _| x.to_vec(), &grid, &[0.0, 1.0]);
        let wrong = GridSpec::new(vec![4, 2], vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!(matches!(ftle_field_fd(&ens, &wrong, 0, 1), Err(Error::Shape(_))));
        let wrong = GridSpec::new(vec![5, 2], vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!(matches!(ftle_field_fd(&ens, &wrong, 0, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn variational_field_for_saddle() {
        let grid = GridSpec::new(vec![3, 3], vec![-1.0, -1.0], vec![1.0, 1.0]);
        let f = ftle_field_variational(&LinearSaddle::new(1.0), &grid, 0.0, 1.0, 0.01).unwrap();
        assert!(f.values().iter().all(|&v| (v - 1.0).abs() < 1e-9));
        let f = ftle_field_variational(&StaticFlow { dim: 2 }, &grid, 0.0, 1.0, 0.1).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_history() {
        let path = FundamentalPath::new(vec![0.0, 1.0, 2.0], vec![DMatrix::identity(2, 2); 3]).unwrap();
        let h = singular_history(&path).unwrap();
        assert_eq!(h.sigma1, vec![1.0; 3]);
        assert_eq!(h.theta, vec![0.0; 3]);
    }

    #[test]
    fn saddle_history() {
        let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.5).collect();
        let mats = times.iter().map(|t| diag(t.exp(), (-t).exp())).collect();
        let h = singular_history(&FundamentalPath::new(times.clone(), mats).unwrap()).unwrap();
        for (k, t) in times.iter().enumerate() {
            assert!((h.sigma1[k] - t.exp()).abs() < 1e-12 * t.exp());
            assert!((h.sigma1[k] * h.sigma2[k] - 1.0).abs() < 1e-12);
            assert_eq!(h.theta[k], 0.0);
        }
    }

    #[test]
    fn theta_reduced_and_unwrapped() {
        let times: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let mats: Vec<DMatrix<f64>> = times
            .iter()
            .map(|&k| {
                let a = 0.2 * k;
                let (s, c) = a.sin_cos();
                let v = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
                if k == 0.0 {
                    DMatrix::identity(2, 2)
                } else {
                    diag(3.0, 1.0 / 3.0) * v.transpose()
                }
            })
            .collect();
        let h = singular_history(&FundamentalPath::new(times, mats).unwrap()).unwrap();
        for k in 1..40 {
            assert!((0.0..PI).contains(&h.theta[k]));
            assert!((h.theta_unwrapped[k] - 0.2 * k as f64).abs() < 1e-9, "{k}");
        }
    }

    #[test]
    fn path_requires_identity_start() {
        assert!(FundamentalPath::new(vec![0.0], vec![diag(2.0, 0.5)]).is_err());
        assert!(FundamentalPath::new(vec![0.0, 0.0], vec![DMatrix::identity(2, 2); 2]).is_err());
    }
}
