use rand::Rng;
use rayon::prelude::*;

use super::MCEstimate;
use crate::error::{Error, Result};
use crate::flows::{integrate_flow_batch, Flow};
use crate::rng;

/// Advances batches of initial conditions through the observation times.
pub trait Propagator: Sync {
    fn dim(&self) -> usize;

    /// Positions of all points of `x0` at every entry of `times` (the first
    /// being the initial time), time-major.
    fn trajectories(&self, x0: &[f64], times: &[f64]) -> Result<Vec<f64>>;

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

/// A continuous flow sampled with RK4 steps of at most `dt`.
pub struct FlowPropagator<'a, F: Flow> {
    pub flow: &'a F,
    pub dt: f64,
}

impl<F: Flow> Propagator for FlowPropagator<'_, F> {
    fn dim(&self) -> usize {
        self.flow.dim()
    }

    fn trajectories(&self, x0: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        if times.len() == 1 {
            return Ok(x0.to_vec());
        }
        integrate_flow_batch(self.flow, x0, times, self.dt)
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        self.flow.domain()
    }
}

/// A discrete map applied once per observation step.
pub struct MapPropagator<M> {
    pub dim: usize,
    pub step: M,
    pub domain: Option<Vec<(f64, f64)>>,
}

impl<M> Propagator for MapPropagator<M>
where
    M: Fn(&mut [f64]) -> Result<()> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn trajectories(&self, x0: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(x0.len() * times.len());
        let mut x = x0.to_vec();
        out.extend_from_slice(&x);
        for _ in 1..times.len() {
            for p in x.chunks_exact_mut(self.dim) {
                (self.step)(p)?;
            }
            out.extend_from_slice(&x);
        }
        Ok(out)
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        self.domain.clone()
    }
}

/// Initial states whose trajectories come ε-close to the anchor's.
#[derive(Debug, Clone, PartialEq)]
pub struct GalaxySpec {
    pub anchor: Vec<f64>,
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// Sampling box; defaults to the propagator's domain.
    pub sample_box: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalaxyEstimate {
    pub volume: MCEstimate,
    /// Initial conditions of the hits, point-major, if requested.
    pub hits: Vec<f64>,
}

/// Volume of the galaxy set by uniform sampling over the box. A sample is a
/// hit iff it is strictly closer than ε to the anchor at some observation
/// time.
pub fn galaxy_volume_mc<P: Propagator>(
    prop: &P,
    spec: &GalaxySpec,
    samples: usize,
    seed: u64,
    keep_hits: bool,
) -> Result<GalaxyEstimate> {
    let d = prop.dim();
    if spec.anchor.len() != d {
        return Err(Error::Shape(format!(
            "anchor has {} coordinates, flow has {d}",
            spec.anchor.len()
        )));
    }
    if !(spec.epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {}", spec.epsilon)));
    }
    if spec.times.is_empty() || spec.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "observation times must be nonempty and increasing".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let bx = spec
        .sample_box
        .clone()
        .or_else(|| prop.domain())
        .ok_or_else(|| Error::Domain("no sampling box given and the flow declares no domain".into()))?;
    if bx.len() != d || bx.iter().any(|r| !(r.1 > r.0)) {
        return Err(Error::Domain(format!("bad sampling box {bx:?}")));
    }
    let box_volume: f64 = bx.iter().map(|r| r.1 - r.0).product();
    let nt = spec.times.len();
    let anchor = prop.trajectories(&spec.anchor, &spec.times)?;
    let eps2 = spec.epsilon * spec.epsilon;

    let parts: Vec<Result<(u64, Vec<f64>)>> = rng::chunks(samples)
        .into_par_iter()
        .map(|(id, count)| {
            let mut r = rng::stream(seed, id);
            let x0: Vec<f64> = (0..count * d)
                .map(|k| r.random_range(bx[k % d].0..bx[k % d].1))
                .collect();
            let path = prop.trajectories(&x0, &spec.times)?;
            let mut hits = 0u64;
            let mut kept = Vec::new();
            for i in 0..count {
                let close = (0..nt).any(|t| {
                    let p = &path[(t * count + i) * d..(t * count + i + 1) * d];
                    let a = &anchor[t * d..(t + 1) * d];
                    p.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() < eps2
                });
                if close {
                    hits += 1;
                    if keep_hits {
                        kept.extend_from_slice(&x0[i * d..(i + 1) * d]);
                    }
                }
            }
            Ok((hits, kept))
        })
        .collect();
    let mut hits = 0u64;
    let mut kept = Vec::new();
    for p in parts {
        let (h, k) = p?;
        hits += h;
        kept.extend(k);
    }
    if hits == 0 {
        log::warn!("galaxy estimate found no hits in {samples} samples; reporting zero volume");
    }
    Ok(GalaxyEstimate {
        volume: MCEstimate::from_hits(hits, samples, box_volume, seed),
        hits: kept,
    })
}
