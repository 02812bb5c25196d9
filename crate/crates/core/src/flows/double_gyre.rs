//! The periodically driven double gyre on `[0, 2] x [0, 1]`.

use std::f64::consts::PI;

use super::field::GridSpec;
use super::integrate::integrate_flow_batch;
use super::Flow;
use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};

pub const DOUBLE_GYRE_DOMAIN: [(f64, f64); 2] = [(0.0, 2.0), (0.0, 1.0)];

/// Reference initial conditions `x1..x6` used for pullback and galaxy
/// comparisons.
pub const DOUBLE_GYRE_ANCHORS: [[f64; 2]; 6] = [
    [1.0, 0.5],
    [0.5, 0.4],
    [0.5, 0.7],
    [0.86, 0.25],
    [0.99, 0.01],
    [0.98, 0.25],
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleGyreParams {
    pub amplitude: f64,
    pub delta: f64,
    /// Angular frequency of the forcing, radians per unit time.
    pub omega: f64,
}

impl Default for DoubleGyreParams {
    fn default() -> Self {
        Self {
            amplitude: 0.25,
            delta: 0.25,
            omega: 2.0 * PI,
        }
    }
}

/// `f(y, t) = a y^2 + b y` with `a = delta sin(omega t)`, `b = 1 - 2a`.
#[inline]
fn forcing(p: &DoubleGyreParams, t: f64) -> (f64, f64) {
    let a = p.delta * (p.omega * t).sin();
    (a, 1.0 - 2.0 * a)
}

#[inline]
fn velocity_with(p: &DoubleGyreParams, a: f64, b: f64, y: f64, z: f64) -> [f64; 2] {
    let f = (a * y + b) * y;
    let df = 2.0 * a * y + b;
    let (sf, cf) = (PI * f).sin_cos();
    let (sz, cz) = (PI * z).sin_cos();
    [-PI * p.amplitude * sf * cz, PI * p.amplitude * cf * sz * df]
}

pub fn double_gyre_velocity(state: [f64; 2], t: f64, p: &DoubleGyreParams) -> [f64; 2] {
    let (a, b) = forcing(p, t);
    velocity_with(p, a, b, state[0], state[1])
}

/// Analytic spatial Jacobian `[[du/dy, du/dz], [dv/dy, dv/dz]]`.
pub fn double_gyre_jacobian(state: [f64; 2], t: f64, p: &DoubleGyreParams) -> [[f64; 2]; 2] {
    let (a, b) = forcing(p, t);
    let [y, z] = state;
    let f = (a * y + b) * y;
    let df = 2.0 * a * y + b;
    let (sf, cf) = (PI * f).sin_cos();
    let (sz, cz) = (PI * z).sin_cos();
    let pa = PI * p.amplitude;
    [
        [-pa * PI * cf * df * cz, pa * PI * sf * sz],
        [pa * sz * (-PI * sf * df * df + cf * 2.0 * a), pa * PI * cf * cz * df],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleGyre(pub DoubleGyreParams);

impl Flow for DoubleGyre {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&double_gyre_velocity([x[0], x[1]], t, &self.0));
    }

    fn jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let j = double_gyre_jacobian([x[0], x[1]], t, &self.0);
        out.copy_from_slice(&[j[0][0], j[0][1], j[1][0], j[1][1]]);
    }

    fn velocity_batch(&self, t: f64, xs: &[f64], out: &mut [f64]) {
        let (a, b) = forcing(&self.0, t);
        for (x, o) in xs.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
            let v = velocity_with(&self.0, a, b, x[0], x[1]);
            o[0] = v[0];
            o[1] = v[1];
        }
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        Some(DOUBLE_GYRE_DOMAIN.to_vec())
    }
}

/// Grid-seeded double gyre experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleGyreSetup {
    /// Grid points along `y` and `z`.
    pub grid: [usize; 2],
    pub t_final: f64,
    /// Internal RK4 step.
    pub dt: f64,
    /// Output sampling interval.
    pub dt_out: f64,
    pub params: DoubleGyreParams,
}

impl Default for DoubleGyreSetup {
    fn default() -> Self {
        Self {
            grid: [500, 251],
            t_final: 20.0,
            dt: 0.01,
            dt_out: 0.1,
            params: DoubleGyreParams::default(),
        }
    }
}

impl DoubleGyreSetup {
    pub fn grid_spec(&self) -> GridSpec {
        let [ny, nz] = self.grid;
        GridSpec::new(
            vec![ny, nz],
            vec![DOUBLE_GYRE_DOMAIN[0].0, DOUBLE_GYRE_DOMAIN[1].0],
            vec![2.0 / (ny - 1) as f64, 1.0 / (nz - 1) as f64],
        )
    }

    pub fn output_times(&self) -> Result<Vec<f64>> {
        let ratio = self.t_final / self.dt_out;
        let n = ratio.round();
        if !(self.dt_out > 0.0) || (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
            return Err(Error::Domain(format!(
                "final time {} is not a positive multiple of the output interval {}",
                self.t_final, self.dt_out
            )));
        }
        Ok((0..=n as usize).map(|k| k as f64 * self.dt_out).collect())
    }
}

/// Advect a regular grid of initial conditions; node index runs over `y`
/// fastest.
pub fn generate_double_gyre_ensemble(setup: &DoubleGyreSetup) -> Result<(TrajectoryEnsemble, GridSpec)> {
    let [ny, nz] = setup.grid;
    if ny < 2 || nz < 2 {
        return Err(Error::Domain(format!("grid {ny}x{nz} too small")));
    }
    let grid = setup.grid_spec();
    let times = setup.output_times()?;
    let x0: Vec<f64> = (0..grid.len()).flat_map(|i| grid.coords(i)).collect();
    let positions = integrate_flow_batch(&DoubleGyre(setup.params), &x0, &times, setup.dt)?;
    let ensemble = TrajectoryEnsemble::new(grid.len(), 2, times, positions)?;
    Ok((ensemble, grid))
}
