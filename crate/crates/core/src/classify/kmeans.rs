use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

pub const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub k: usize,
    pub labels: Vec<u32>,
    /// Row-major, `dim` values per centroid.
    pub centroids: Vec<f64>,
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid (lowest index on ties) and squared distance per point.
fn assign(points: &[f64], dim: usize, centroids: &[f64]) -> Vec<(u32, f64)> {
    points
        .par_chunks_exact(dim)
        .map(|p| {
            let mut best = (0u32, f64::INFINITY);
            for (c, q) in centroids.chunks_exact(dim).enumerate() {
                let d = dist2(p, q);
                if d < best.1 {
                    best = (c as u32, d);
                }
            }
            best
        })
        .collect()
}

fn plus_plus(points: &[f64], dim: usize, k: usize, seed: u64) -> Vec<f64> {
    let n = points.len() / dim;
    let mut r = rng::stream(seed, 0);
    let mut chosen = vec![r.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .chunks_exact(dim)
        .map(|p| dist2(p, &points[chosen[0] * dim..(chosen[0] + 1) * dim]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = r.random_range(0.0..1.0) * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive total"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        let c = &points[next * dim..(next + 1) * dim];
        for (d, p) in d2.iter_mut().zip(points.chunks_exact(dim)) {
            *d = d.min(dist2(p, c));
        }
    }
    chosen
        .iter()
        .flat_map(|&i| points[i * dim..(i + 1) * dim].iter().copied())
        .collect()
}

/// k-means with k-means++ seeding and Lloyd iterations until the assignment
/// stops changing or [`KMEANS_MAX_ITER`] is reached. An empty cluster is
/// re-seeded with the point farthest from its centroid.
pub fn kmeans(points: &[f64], dim: usize, k: usize, seed: u64) -> Result<KMeansResult> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::Shape(format!(
            "{} values do not form points of dimension {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::Domain(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("points contain non-finite values".into()));
    }
    let mut centroids = plus_plus(points, dim, k, seed);
    let mut assigned = assign(points, dim, &centroids);
    let mut history = vec![assigned.iter().map(|a| a.1).sum::<f64>()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        let mut counts = vec![0usize; k];
        for a in &assigned {
            counts[a.0 as usize] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[assigned[i].0 as usize] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if assigned[b].1 >= assigned[i].1 => Some(b),
                    _ => Some(i),
                });
            if let Some(i) = far.filter(|&i| assigned[i].1 > 0.0) {
                counts[assigned[i].0 as usize] -= 1;
                counts[c] = 1;
                assigned[i] = (c as u32, 0.0);
            }
        }
        let mut sums = vec![0.0; k * dim];
        for (p, a) in points.chunks_exact(dim).zip(&assigned) {
            let c = a.0 as usize;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for a in 0..dim {
                    centroids[c * dim + a] = sums[c * dim + a] / counts[c] as f64;
                }
            }
        }
        let next = assign(points, dim, &centroids);
        let changed = next.iter().zip(&assigned).any(|(a, b)| a.0 != b.0);
        assigned = next;
        history.push(assigned.iter().map(|a| a.1).sum());
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("k-means stopped after {KMEANS_MAX_ITER} iterations without a fixed point");
    }
    Ok(KMeansResult {
        k,
        labels: assigned.iter().map(|a| a.0).collect(),
        centroids,
        inertia: *history.last().expect("nonempty"),
        inertia_history: history,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn every_point_its_own_cluster() {
        let pts = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0];
        let res = kmeans(&pts, 2, 4, 7).unwrap();
        let mut l = res.labels.clone();
        l.sort();
        l.dedup();
        assert_eq!(l.len(), 4);
        assert_eq!(res.inertia, 0.0);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = [1.0, 2.0, 3.0, 4.0, 5.0, 9.0];
        let res = kmeans(&pts, 2, 1, 0).unwrap();
        assert!(res.labels.iter().all(|&l| l == 0));
        assert!((res.centroids[0] - 3.0).abs() < 1e-15 && (res.centroids[1] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn separated_blobs() {
        for seed in 0..10 {
            let mut r = rng::stream(100 + seed, 0);
            let pts: Vec<f64> = (0..200)
                .flat_map(|i| {
                    let c = if i < 100 { 0.0 } else { 10.0 };
                    [c + r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]
                })
                .collect();
            let res = kmeans(&pts, 2, 2, seed).unwrap();
            assert!(res.labels[..100].iter().all(|&l| l == res.labels[0]));
            assert!(res.labels[100..].iter().all(|&l| l == res.labels[100]));
            assert_ne!(res.labels[0], res.labels[100]);
        }
    }

    #[test]
    fn errors() {
        assert!(kmeans(&[0.0, 1.0], 1, 3, 0).is_err());
        assert!(kmeans(&[0.0, 1.0], 1, 0, 0).is_err());
        assert!(kmeans(&[0.0, 1.0, 2.0], 2, 1, 0).is_err());
    }

    #[test]
    fn duplicate_points() {
        let pts = [1.0; 10];
        let res = kmeans(&pts, 1, 3, 1).unwrap();
        assert_eq!(res.inertia, 0.0);
    }

    proptest! {
        #[test]
        fn inertia_never_increases(pts in proptest::collection::vec(-10.0f64..10.0, 20..200), k in 1usize..6, seed in 0u64..50) {
            let pts = &pts[..pts.len() / 2 * 2];
            let res = kmeans(pts, 2, k.min(pts.len() / 2), seed).unwrap();
            for w in res.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
            }
            prop_assert_eq!(res.clone(), kmeans(pts, 2, k.min(pts.len() / 2), seed).unwrap());
        }
    }
}
