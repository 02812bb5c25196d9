//! Classical fourth-order Runge-Kutta integration of trajectories and of the
//! variational equation `W' = Df(t, x(t)) W`, `W(t0) = I`.

use rayon::prelude::*;

use super::ftle::FundamentalPath;
use super::Flow;
use crate::error::{Error, Result};

/// States sampled at increasing times, `dim` reals per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
}

impl SampledTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

/// Time nodes `t0, t0 + dt, ...` ending exactly on `t1`. A ratio
/// `(t1 - t0) / dt` within 1e-9 of an integer is treated as that integer.
fn schedule(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("step size must be positive, got {dt}")));
    }
    if !(t1 > t0) {
        return Err(Error::Domain(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    let ratio = (t1 - t0) / dt;
    let whole = ratio.round();
    let n = if (ratio - whole).abs() <= 1e-9 * ratio.max(1.0) {
        whole as usize
    } else {
        ratio.floor() as usize + 1
    };
    let mut nodes: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    nodes.push(t1);
    Ok(nodes)
}

struct Rk4<'a, F> {
    f: &'a F,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a, F: Fn(f64, &[f64], &mut [f64])> Rk4<'a, F> {
    fn new(f: &'a F, dim: usize) -> Self {
        Self {
            f,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    fn step(&mut self, t: f64, h: f64, x: &mut [f64]) {
        let [k1, k2, k3, k4] = &mut self.k;
        (self.f)(t, x, k1);
        for ((o, xi), ki) in self.tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
            *o = xi + 0.5 * h * ki;
        }
        (self.f)(t + 0.5 * h, &self.tmp, k2);
        for ((o, xi), ki) in self.tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
            *o = xi + 0.5 * h * ki;
        }
        (self.f)(t + 0.5 * h, &self.tmp, k3);
        for ((o, xi), ki) in self.tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
            *o = xi + h * ki;
        }
        (self.f)(t + h, &self.tmp, k4);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// RK4 samples at `t0, t0 + dt, ..., t1`; the last step is shortened to land
/// on `t1`.
pub fn integrate_rk4<F>(velocity: F, x0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<SampledTrajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let nodes = schedule(t0, t1, dt)?;
    let dim = x0.len();
    let mut rk = Rk4::new(&velocity, dim);
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity(nodes.len() * dim);
    states.extend_from_slice(&x);
    for w in nodes.windows(2) {
        rk.step(w[0], w[1] - w[0], &mut x);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: w[1] });
        }
        states.extend_from_slice(&x);
    }
    Ok(SampledTrajectory {
        dim,
        times: nodes,
        states,
    })
}

/// Integrate to each of `times` (the first is the initial time), splitting
/// every output interval into equal steps no longer than `max_dt`.
pub fn integrate_to_times<F>(velocity: F, x0: &[f64], times: &[f64], max_dt: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = x0.len();
    let mut rk = Rk4::new(&velocity, dim);
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(times.len() * dim);
    out.extend_from_slice(&x);
    for w in times.windows(2) {
        let (n, h) = substeps(w[0], w[1], max_dt)?;
        for s in 0..n {
            rk.step(w[0] + s as f64 * h, h, &mut x);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: w[1] });
        }
        out.extend_from_slice(&x);
    }
    Ok(out)
}

fn substeps(a: f64, b: f64, max_dt: f64) -> Result<(usize, f64)> {
    if !(max_dt > 0.0) {
        return Err(Error::Domain(format!("step size must be positive, got {max_dt}")));
    }
    if !(b > a) {
        return Err(Error::Domain(format!("output times not increasing: {a} then {b}")));
    }
    let n = ((b - a) / max_dt - 1e-9).ceil().max(1.0) as usize;
    Ok((n, (b - a) / n as f64))
}

/// Trajectories per work unit in [`integrate_flow_batch`].
const BATCH: usize = 512;

/// Integrate many initial conditions of `flow` in lock step and return the
/// positions time-major, `(time, trajectory, dimension)`.
///
/// Each block of trajectories is advanced independently, so the result does
/// not depend on the number of worker threads.
pub fn integrate_flow_batch<F: Flow>(flow: &F, x0: &[f64], times: &[f64], max_dt: f64) -> Result<Vec<f64>> {
    let d = flow.dim();
    let n = x0.len() / d;
    let steps = times
        .windows(2)
        .map(|w| substeps(w[0], w[1], max_dt))
        .collect::<Result<Vec<_>>>()?;
    let blocks: Vec<Result<Vec<f64>>> = x0
        .par_chunks(BATCH * d)
        .map(|block| {
            let m = block.len();
            let mut x = block.to_vec();
            let mut k: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; m]);
            let mut tmp = vec![0.0; m];
            let mut out = Vec::with_capacity(m * times.len());
            out.extend_from_slice(&x);
            for (w, &(ns, h)) in times.windows(2).zip(&steps) {
                for s in 0..ns {
                    let t = w[0] + s as f64 * h;
                    let [k1, k2, k3, k4] = &mut k;
                    flow.velocity_batch(t, &x, k1);
                    for i in 0..m {
                        tmp[i] = x[i] + 0.5 * h * k1[i];
                    }
                    flow.velocity_batch(t + 0.5 * h, &tmp, k2);
                    for i in 0..m {
                        tmp[i] = x[i] + 0.5 * h * k2[i];
                    }
                    flow.velocity_batch(t + 0.5 * h, &tmp, k3);
                    for i in 0..m {
                        tmp[i] = x[i] + h * k3[i];
                    }
                    flow.velocity_batch(t + h, &tmp, k4);
                    for i in 0..m {
                        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::BlowUp { t: w[1] });
                }
                out.extend_from_slice(&x);
            }
            Ok(out)
        })
        .collect();

    let mut positions = vec![0.0; n * d * times.len()];
    let mut first = 0;
    for block in blocks {
        let block = block?;
        let m = block.len() / times.len();
        for (ti, src) in block.chunks_exact(m).enumerate() {
            let at = ti * n * d + first;
            positions[at..at + m].copy_from_slice(src);
        }
        first += m;
    }
    Ok(positions)
}

/// Integrate the trajectory and its fundamental matrix together.
pub fn integrate_variational<F, J>(
    velocity: F,
    jacobian: J,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<(SampledTrajectory, FundamentalPath)>
where
    F: Fn(f64, &[f64], &mut [f64]),
    J: Fn(f64, &[f64], &mut [f64]),
{
    let d = x0.len();
    let jac = std::cell::RefCell::new(vec![0.0; d * d]);
    let coupled = |t: f64, z: &[f64], out: &mut [f64]| {
        let (x, w) = z.split_at(d);
        let (dx, dw) = out.split_at_mut(d);
        velocity(t, x, dx);
        let mut j = jac.borrow_mut();
        jacobian(t, x, &mut j);
        for r in 0..d {
            for c in 0..d {
                dw[r * d + c] = (0..d).map(|k| j[r * d + k] * w[k * d + c]).sum();
            }
        }
    };
    let mut z0 = x0.to_vec();
    for r in 0..d {
        for c in 0..d {
            z0.push(if r == c { 1.0 } else { 0.0 });
        }
    }
    let full = integrate_rk4(coupled, &z0, t0, t1, dt)?;
    let stride = d + d * d;
    let mut states = Vec::with_capacity(full.len() * d);
    let mut matrices = Vec::with_capacity(full.len());
    for z in full.states.chunks_exact(stride) {
        states.extend_from_slice(&z[..d]);
        matrices.push(nalgebra::DMatrix::from_row_slice(d, d, &z[d..]));
    }
    Ok((
        SampledTrajectory {
            dim: d,
            times: full.times.clone(),
            states,
        },
        FundamentalPath::new(full.times, matrices)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{DoubleGyre, DoubleGyreParams, LinearSaddle, StaticFlow};

    #[test]
    fn zero_field_is_constant() {
        let tr = integrate_rk4(|_, _, o: &mut [f64]| o.fill(0.0), &[0.3, -2.0], 0.0, 1.0, 0.1).unwrap();
        assert_eq!(tr.len(), 11);
        for k in 0..tr.len() {
            assert_eq!(tr.state(k), &[0.3, -2.0]);
        }
    }

    #[test]
    fn exponential_growth() {
        let tr = integrate_rk4(|_, x, o: &mut [f64]| o[0] = x[0], &[1.0], 0.0, 1.0, 0.01).unwrap();
        assert_eq!(*tr.times.last().unwrap(), 1.0);
        assert!((tr.last()[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |dt: f64| {
            let tr = integrate_rk4(|_, x, o: &mut [f64]| o[0] = x[0], &[1.0], 0.0, 1.0, dt).unwrap();
            (tr.last()[0] - std::f64::consts::E).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn final_step_is_shortened() {
        let tr = integrate_rk4(|_, _, o: &mut [f64]| o[0] = 1.0, &[0.0], 0.0, 1.05, 0.1).unwrap();
        assert_eq!(tr.len(), 12);
        assert_eq!(*tr.times.last().unwrap(), 1.05);
        assert!((tr.last()[0] - 1.05).abs() < 1e-14);
    }

    #[test]
    fn blow_up_reports_time() {
        let r = integrate_rk4(|_, x, o: &mut [f64]| o[0] = x[0] * x[0], &[1.0], 0.0, 2.0, 0.1);
        match r {
            Err(Error::BlowUp { t }) => assert!(t > 0.5 && t <= 2.0, "{t}"),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn bad_steps_are_rejected() {
        let f = |_: f64, _: &[f64], o: &mut [f64]| o.fill(0.0);
        assert!(integrate_rk4(f, &[0.0], 0.0, 1.0, 0.0).is_err());
        assert!(integrate_rk4(f, &[0.0], 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn variational_identity_for_zero_field() {
        let flow = StaticFlow { dim: 2 };
        let (_, path) = integrate_variational(
            |t, x, o: &mut [f64]| flow.velocity(t, x, o),
            |t, x, o: &mut [f64]| flow.jacobian(t, x, o),
            &[0.2, 0.3],
            0.0,
            1.0,
            0.1,
        )
        .unwrap();
        for m in path.matrices() {
            assert_eq!(m, &nalgebra::DMatrix::identity(2, 2));
        }
    }

    #[test]
    fn variational_linear_saddle_closed_form() {
        let flow = LinearSaddle::new(1.0);
        let (_, path) = integrate_variational(
            |t, x, o: &mut [f64]| flow.velocity(t, x, o),
            |t, x, o: &mut [f64]| flow.jacobian(t, x, o),
            &[0.1, 0.1],
            0.0,
            1.0,
            0.001,
        )
        .unwrap();
        let w = path.matrices().last().unwrap();
        assert!((w[(0, 0)] - 1f64.exp()).abs() < 1e-8);
        assert!((w[(1, 1)] - (-1f64).exp()).abs() < 1e-8);
        assert!(w[(0, 1)].abs() < 1e-12 && w[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn double_gyre_determinant_is_one() {
        let flow = DoubleGyre(DoubleGyreParams::default());
        let (_, path) = integrate_variational(
            |t, x, o: &mut [f64]| flow.velocity(t, x, o),
            |t, x, o: &mut [f64]| flow.jacobian(t, x, o),
            &[1.0, 0.5],
            0.0,
            5.0,
            0.01,
        )
        .unwrap();
        for m in path.matrices() {
            assert!((m.determinant() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn batch_matches_single_trajectory() {
        let flow = DoubleGyre(DoubleGyreParams::default());
        let x0: Vec<f64> = (0..1100).flat_map(|i| [0.0018 * i as f64, 0.3]).collect();
        let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        let batch = integrate_flow_batch(&flow, &x0, &times, 0.01).unwrap();
        let n = 1100;
        for i in [0, 511, 512, 1099] {
            let single = integrate_to_times(
                |t, x, o: &mut [f64]| flow.velocity(t, x, o),
                &x0[2 * i..2 * i + 2],
                &times,
                0.01,
            )
            .unwrap();
            for ti in 0..times.len() {
                for k in 0..2 {
                    assert_eq!(batch[(ti * n + i) * 2 + k], single[ti * 2 + k]);
                }
            }
        }
    }
}
