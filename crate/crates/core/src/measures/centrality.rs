use std::collections::VecDeque;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::netbuild::AdjacencyMatrix;
use crate::rng;

/// BFS sources per work unit.
const SOURCE_BLOCK: usize = 64;
/// Work units evaluated between sequential reductions.
const BLOCKS_PER_ROUND: usize = 32;

fn require_connected(a: &AdjacencyMatrix) -> Result<()> {
    if a.n() == 0 {
        return Err(Error::Domain("empty graph".into()));
    }
    a.require_connected()
}

/// Unweighted BFS distances from `s`; `u32::MAX` marks unreachable nodes.
fn bfs(a: &AdjacencyMatrix, s: usize, dist: &mut [u32], queue: &mut VecDeque<u32>) {
    dist.fill(u32::MAX);
    dist[s] = 0;
    queue.clear();
    queue.push_back(s as u32);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize] + 1;
        for &v in a.neighbors(u as usize) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du;
                queue.push_back(v);
            }
        }
    }
}

/// `N / sum_j dist(i, j)` over unweighted shortest paths.
pub fn closeness(a: &AdjacencyMatrix) -> Result<Vec<f64>> {
    require_connected(a)?;
    let n = a.n();
    if n == 1 {
        return Err(Error::Domain("closeness is undefined for a single node".into()));
    }
    Ok((0..n)
        .into_par_iter()
        .map_init(
            || (vec![0u32; n], VecDeque::new()),
            |(dist, queue), s| {
                bfs(a, s, dist, queue);
                let total: u64 = dist.iter().map(|&d| d as u64).sum();
                n as f64 / total as f64
            },
        )
        .collect())
}

struct Brandes {
    sigma: Vec<f64>,
    dist: Vec<u32>,
    delta: Vec<f64>,
    order: Vec<u32>,
}

impl Brandes {
    fn new(n: usize) -> Self {
        Self {
            sigma: vec![0.0; n],
            dist: vec![u32::MAX; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
        }
    }

    /// Add the dependencies of source `s` to `acc`.
    fn accumulate(&mut self, a: &AdjacencyMatrix, s: usize, acc: &mut [f64]) {
        self.sigma.fill(0.0);
        self.dist.fill(u32::MAX);
        self.delta.fill(0.0);
        self.order.clear();
        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.order.push(s as u32);
        let mut head = 0;
        while head < self.order.len() {
            let u = self.order[head] as usize;
            head += 1;
            for &v in a.neighbors(u) {
                let v = v as usize;
                if self.dist[v] == u32::MAX {
                    self.dist[v] = self.dist[u] + 1;
                    self.order.push(v as u32);
                }
                if self.dist[v] == self.dist[u] + 1 {
                    self.sigma[v] += self.sigma[u];
                }
            }
        }
        for &w in self.order.iter().rev() {
            let w = w as usize;
            for &v in a.neighbors(w) {
                let v = v as usize;
                if self.dist[v] + 1 == self.dist[w] {
                    self.delta[v] += self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
                }
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

/// Sum of dependencies over `sources`, scaled by `scale`. Partial sums are
/// formed per fixed block of sources and added in block order, so the result
/// does not depend on the worker count.
fn brandes_sum(a: &AdjacencyMatrix, sources: &[usize], scale: f64) -> Vec<f64> {
    let n = a.n();
    let mut total = vec![0.0; n];
    let blocks: Vec<&[usize]> = sources.chunks(SOURCE_BLOCK).collect();
    for round in blocks.chunks(BLOCKS_PER_ROUND) {
        let partial: Vec<Vec<f64>> = round
            .par_iter()
            .map(|block| {
                let mut b = Brandes::new(n);
                let mut acc = vec![0.0; n];
                for &s in *block {
                    b.accumulate(a, s, &mut acc);
                }
                acc
            })
            .collect();
        for p in partial {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
    }
    for t in &mut total {
        *t *= scale;
    }
    total
}

/// Exact shortest-path betweenness over unordered endpoint pairs.
pub fn betweenness(a: &AdjacencyMatrix) -> Result<Vec<f64>> {
    require_connected(a)?;
    let sources: Vec<usize> = (0..a.n()).collect();
    // Every unordered pair is reached once from each endpoint.
    Ok(brandes_sum(a, &sources, 0.5))
}

/// Betweenness estimated from `pivots` distinct random sources, scaled by
/// `n / pivots`.
pub fn betweenness_sampled(a: &AdjacencyMatrix, pivots: usize, seed: u64) -> Result<Vec<f64>> {
    let n = a.n();
    if pivots == 0 || pivots > n {
        return Err(Error::Domain(format!("pivot count {pivots} must be in 1..={n}")));
    }
    require_connected(a)?;
    let mut sources = if pivots == n {
        (0..n).collect()
    } else {
        sample(&mut rng::stream(seed, 0), n, pivots).into_vec()
    };
    sources.sort_unstable();
    Ok(brandes_sum(a, &sources, 0.5 * n as f64 / pivots as f64))
}
