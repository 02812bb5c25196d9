use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};

/// The interval on which the prototype map acts as a doubling map.
pub const MAP_MIXING_REGION: (f64, f64) = (0.25, 0.75);

/// One step of the prototype map on `[0, 1]`: the identity outside
/// `[1/4, 3/4]` and `(2(x - 1/4) mod 1/2) + 1/4` inside.
///
/// `3/4` is mapped to itself so the map is continuous there.
pub fn map_1d_step(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("map argument {x} outside [0, 1]")));
    }
    let (lo, hi) = MAP_MIXING_REGION;
    if x < lo || x >= hi {
        return Ok(x);
    }
    Ok((2.0 * (x - lo)).rem_euclid(0.5) + lo)
}

/// Exact step on the lattice `m / scale` with `scale` divisible by 4.
fn lattice_step(m: u64, scale: u64) -> u64 {
    let quarter = scale / 4;
    if m < quarter || m >= 3 * quarter {
        return m;
    }
    (2 * (m - quarter)) % (2 * quarter) + quarter
}

/// `n` equispaced points on `[0, 1]` iterated `steps` times.
///
/// Initial points `i / (n - 1)` stay on the lattice `m / (4 (n - 1))` under
/// the map, so orbits are computed exactly in integers and converted to
/// reals slice by slice. Iterating in floating point would lose one bit per
/// doubling and collapse the mixing region after about 53 steps.
pub fn generate_map_ensemble(n: usize, steps: usize) -> Result<TrajectoryEnsemble> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 trajectories, got {n}")));
    }
    if steps < 1 {
        return Err(Error::Domain("need at least one step".into()));
    }
    let scale = 4 * (n as u64 - 1);
    let mut state: Vec<u64> = (0..n as u64).map(|i| 4 * i).collect();
    let mut positions = Vec::with_capacity(n * (steps + 1));
    for k in 0..=steps {
        if k > 0 {
            for m in state.iter_mut() {
                *m = lattice_step(*m, scale);
            }
        }
        positions.extend(state.iter().map(|&m| m as f64 / scale as f64));
    }
    let times = (0..=steps).map(|k| k as f64).collect();
    TrajectoryEnsemble::new(n, 1, times, positions)
}
