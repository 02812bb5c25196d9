//! Built-in dynamical systems, trajectory and variational integration, FTLE.

mod double_gyre;
mod field;
mod ftle;
mod integrate;
mod map1d;

pub use double_gyre::{
    double_gyre_jacobian, double_gyre_velocity, generate_double_gyre_ensemble, DoubleGyre, DoubleGyreParams,
    DoubleGyreSetup, DOUBLE_GYRE_ANCHORS, DOUBLE_GYRE_DOMAIN,
};
pub use field::{GridSpec, ScalarField};
pub use ftle::{
    ftle_field_fd, ftle_field_variational, ftle_from_w, singular_history, FundamentalPath, SingularHistory,
};
pub use integrate::{
    integrate_flow_batch, integrate_rk4, integrate_to_times, integrate_variational, SampledTrajectory,
};
pub use map1d::{generate_map_ensemble, map_1d_step, MAP_MIXING_REGION};

/// A smooth, possibly time-dependent vector field on R^d.
pub trait Flow: Sync {
    fn dim(&self) -> usize;

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Spatial Jacobian, row-major `d x d`.
    fn jacobian(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Velocity at many points sharing one time stamp.
    fn velocity_batch(&self, t: f64, xs: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (x, o) in xs.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            self.velocity(t, x, o);
        }
    }

    /// Invariant domain, if the flow has one.
    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

/// The zero vector field.
#[derive(Debug, Clone, Copy)]
pub struct StaticFlow {
    pub dim: usize,
}

impl Flow for StaticFlow {
    fn dim(&self) -> usize {
        self.dim
    }

    fn velocity(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn jacobian(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Linear saddle `y' = lambda y`, `z' = -lambda z` around `center`.
#[derive(Debug, Clone, Copy)]
pub struct LinearSaddle {
    pub lambda: f64,
    pub center: [f64; 2],
}

impl LinearSaddle {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            center: [0.0, 0.0],
        }
    }
}

impl Flow for LinearSaddle {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.lambda * (x[0] - self.center[0]);
        out[1] = -self.lambda * (x[1] - self.center[1]);
    }

    fn jacobian(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[self.lambda, 0.0, 0.0, -self.lambda]);
    }
}
