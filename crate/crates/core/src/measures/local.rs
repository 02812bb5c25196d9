use rayon::prelude::*;

use crate::netbuild::AdjacencyMatrix;

pub fn degree(a: &AdjacencyMatrix) -> Vec<u32> {
    (0..a.n()).map(|i| a.degree(i) as u32).collect()
}

/// Mean degree of the neighbours; `None` for isolated nodes.
pub fn avg_nn_degree(a: &AdjacencyMatrix) -> Vec<Option<f64>> {
    (0..a.n())
        .into_par_iter()
        .map(|i| {
            let nb = a.neighbors(i);
            if nb.is_empty() {
                return None;
            }
            let s: u64 = nb.iter().map(|&j| a.degree(j as usize) as u64).sum();
            Some(s as f64 / nb.len() as f64)
        })
        .collect()
}

/// `d_i - <d>_nn,i`; `None` for isolated nodes.
pub fn degree_anomaly(a: &AdjacencyMatrix) -> Vec<Option<f64>> {
    avg_nn_degree(a)
        .into_iter()
        .enumerate()
        .map(|(i, nn)| nn.map(|v| a.degree(i) as f64 - v))
        .collect()
}

/// Nodes per work unit in triangle counting.
const TRI_BLOCK: usize = 1024;

/// Number of triangles through every node; `(A^3)_ii` is twice this.
///
/// Each triangle is found once from its lowest-ranked vertex, where nodes are
/// ranked by `(degree, index)`, so that high-degree nodes only ever scan
/// short forward lists.
pub fn triangles(a: &AdjacencyMatrix) -> Vec<u64> {
    let n = a.n();
    let rank_less = |u: usize, v: usize| (a.degree(u), u) < (a.degree(v), v);
    let forward_offsets: Vec<usize> = std::iter::once(0)
        .chain((0..n).scan(0usize, |acc, u| {
            *acc += a.neighbors(u).iter().filter(|&&v| rank_less(u, v as usize)).count();
            Some(*acc)
        }))
        .collect();
    let mut forward = vec![0u32; forward_offsets[n]];
    for u in 0..n {
        let mut at = forward_offsets[u];
        for &v in a.neighbors(u) {
            if rank_less(u, v as usize) {
                forward[at] = v;
                at += 1;
            }
        }
    }
    let fwd = |u: usize| &forward[forward_offsets[u]..forward_offsets[u + 1]];

    (0..n.div_ceil(TRI_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut count = vec![0u32; n];
            let mut mark = vec![u32::MAX; n];
            let mut own = vec![0u64; TRI_BLOCK];
            let lo = b * TRI_BLOCK;
            for u in lo..((b + 1) * TRI_BLOCK).min(n) {
                for &v in fwd(u) {
                    mark[v as usize] = u as u32;
                }
                for &v in fwd(u) {
                    let mut hits = 0u32;
                    for &w in fwd(v as usize) {
                        let hit = (mark[w as usize] == u as u32) as u32;
                        count[w as usize] += hit;
                        hits += hit;
                    }
                    count[v as usize] += hits;
                    own[u - lo] += hits as u64;
                }
            }
            (lo, own, count)
        })
        .fold(
            || vec![0u64; n],
            |mut acc, (lo, own, count)| {
                for (a, c) in acc.iter_mut().zip(count) {
                    *a += c as u64;
                }
                for (k, o) in own.into_iter().enumerate() {
                    if lo + k < n {
                        acc[lo + k] += o;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a += b;
                }
                x
            },
        )
}

/// `(A^3)_ii / (d_i (d_i - 1))`; `None` where `d_i < 2`.
pub fn clustering(a: &AdjacencyMatrix) -> Vec<Option<f64>> {
    clustering_from(a, &triangles(a))
}

/// `(A^3)_ii / d_i^2`; `None` where `d_i = 0`.
pub fn clustering_simplified(a: &AdjacencyMatrix) -> Vec<Option<f64>> {
    clustering_simplified_from(a, &triangles(a))
}

pub(crate) fn clustering_from(a: &AdjacencyMatrix, tri: &[u64]) -> Vec<Option<f64>> {
    tri.iter()
        .enumerate()
        .map(|(i, &t)| {
            let d = a.degree(i) as f64;
            (d >= 2.0).then(|| 2.0 * t as f64 / (d * (d - 1.0)))
        })
        .collect()
}

pub(crate) fn clustering_simplified_from(a: &AdjacencyMatrix, tri: &[u64]) -> Vec<Option<f64>> {
    tri.iter()
        .enumerate()
        .map(|(i, &t)| {
            let d = a.degree(i) as f64;
            (d >= 1.0).then(|| 2.0 * t as f64 / (d * d))
        })
        .collect()
}
