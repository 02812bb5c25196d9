//! Brute-force references for network construction and node measures on
//! random small ensembles.

#![allow(clippy::needless_range_loop)]

use flownet_core::measures::{
    avg_nn_degree, betweenness, closeness, clustering, clustering_simplified, degree, triangles,
};
use flownet_core::netbuild::{build_adjacency, build_adjacency_prefixes};
use flownet_core::{AdjacencyMatrix, TrajectoryEnsemble};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: u64 = 200;

fn random_ensemble(rng: &mut ChaCha8Rng) -> (TrajectoryEnsemble, f64) {
    let n = rng.random_range(2..=200usize);
    let dim = rng.random_range(1..=3usize);
    let steps = rng.random_range(2..=6usize);
    // Coarse lattice values make exact ties at distance epsilon common.
    let positions: Vec<f64> = (0..n * dim * steps)
        .map(|_| rng.random_range(0..40) as f64 / 40.0)
        .collect();
    let eps = [0.05, 0.1, 0.15, 0.25][rng.random_range(0..4)];
    let times = (0..steps).map(|k| k as f64).collect();
    (TrajectoryEnsemble::new(n, dim, times, positions).unwrap(), eps)
}

/// Links are decided on squared distances, as in the library, so that exact
/// ties resolve identically.
fn brute_adjacency(e: &TrajectoryEnsemble, eps: f64, upto: usize) -> Vec<Vec<bool>> {
    let n = e.n_traj();
    let mut a = vec![vec![false; n]; n];
    for t in 0..=upto {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d2: f64 = e
                    .point(t, i)
                    .iter()
                    .zip(e.point(t, j))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                if d2 < eps * eps {
                    a[i][j] = true;
                }
            }
        }
    }
    a
}

fn dense(a: &AdjacencyMatrix) -> Vec<Vec<bool>> {
    let n = a.n();
    let mut m = vec![vec![false; n]; n];
    for i in 0..n {
        for &j in a.neighbors(i) {
            m[i][j as usize] = true;
        }
    }
    m
}

fn floyd_warshall(a: &[Vec<bool>]) -> Vec<Vec<u64>> {
    let n = a.len();
    let inf = u64::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if a[i][j] {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Number of shortest paths between every pair, by dynamic programming over
/// distance layers.
fn path_counts(a: &[Vec<bool>], d: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut sigma = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| d[s][v]);
        sigma[s][s] = 1.0;
        for &v in &order[1..] {
            sigma[s][v] = (0..n)
                .filter(|&u| a[u][v] && d[s][u] + 1 == d[s][v])
                .map(|u| sigma[s][u])
                .sum();
        }
    }
    sigma
}

fn brute_betweenness(a: &[Vec<bool>]) -> Vec<f64> {
    let n = a.len();
    let d = floyd_warshall(a);
    let sigma = path_counts(a, &d);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            for v in 0..n {
                if v != s && v != t && d[s][v] + d[v][t] == d[s][t] {
                    b[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
                }
            }
        }
    }
    b
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn adjacency_matches_pairwise_distances() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, eps) = random_ensemble(&mut rng);
        let a = build_adjacency(&e, eps).unwrap();
        assert_eq!(dense(&a), brute_adjacency(&e, eps, e.n_times() - 1), "seed {seed}");
    }
}

#[test]
fn local_measures_match_dense_formulas() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, eps) = random_ensemble(&mut rng);
        let a = build_adjacency(&e, eps).unwrap();
        let m = dense(&a);
        let n = m.len();
        let deg: Vec<u32> = m.iter().map(|r| r.iter().filter(|&&x| x).count() as u32).collect();
        assert_eq!(degree(&a), deg, "seed {seed}");
        let mut tri = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                for k in j + 1..n {
                    if m[i][j] && m[j][k] && m[i][k] {
                        tri[i] += 1;
                    }
                }
            }
        }
        assert_eq!(triangles(&a), tri, "seed {seed}");
        let c = clustering(&a);
        let cs = clustering_simplified(&a);
        let nn = avg_nn_degree(&a);
        for i in 0..n {
            let d = deg[i] as f64;
            let a3 = 2.0 * tri[i] as f64;
            match c[i] {
                Some(v) => assert!(deg[i] >= 2 && close(v, a3 / (d * (d - 1.0)))),
                None => assert!(deg[i] < 2),
            }
            match cs[i] {
                Some(v) => assert!(deg[i] >= 1 && close(v, a3 / (d * d))),
                None => assert_eq!(deg[i], 0),
            }
            if deg[i] > 0 {
                let s: u32 = (0..n).filter(|&j| m[i][j]).map(|j| deg[j]).sum();
                assert!(close(nn[i].unwrap(), s as f64 / d));
            } else {
                assert!(nn[i].is_none());
            }
        }
    }
}

#[test]
fn path_measures_match_floyd_warshall() {
    let mut checked = 0;
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, eps) = random_ensemble(&mut rng);
        let a = build_adjacency(&e, eps).unwrap();
        let m = dense(&a);
        let n = m.len();
        if !a.is_connected() || n < 2 {
            assert!(closeness(&a).is_err() || n < 2);
            continue;
        }
        checked += 1;
        let d = floyd_warshall(&m);
        let cl = closeness(&a).unwrap();
        for i in 0..n {
            let s: u64 = d[i].iter().sum();
            assert!(close(cl[i], n as f64 / s as f64), "seed {seed}");
        }
        let b = betweenness(&a).unwrap();
        for (x, y) in b.iter().zip(brute_betweenness(&m)) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0), "seed {seed}: {x} vs {y}");
        }
    }
    assert!(checked > 20, "only {checked} connected instances");
}

#[test]
fn path_measures_on_connected_random_graphs() {
    // Dense random graphs are nearly always connected; these complement the
    // geometric instances above.
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(2..=60usize);
        let p = rng.random_range(0.1..0.6);
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let a = AdjacencyMatrix::from_edges(n, &edges, 1.0, 0, 0.0).unwrap();
        let m = dense(&a);
        for (x, y) in betweenness(&a).unwrap().iter().zip(brute_betweenness(&m)) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0), "seed {seed}: {x} vs {y}");
        }
    }
}

fn permuted(e: &TrajectoryEnsemble, perm: &[usize]) -> TrajectoryEnsemble {
    let (n, dim) = (e.n_traj(), e.dim());
    let mut pos = Vec::with_capacity(e.positions().len());
    for t in 0..e.n_times() {
        for &p in perm {
            pos.extend_from_slice(e.point(t, p));
        }
    }
    TrajectoryEnsemble::new(n, dim, e.times().to_vec(), pos).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabelling_permutes_measures(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, eps) = random_ensemble(&mut rng);
        let n = e.n_traj();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let a = build_adjacency(&e, eps).unwrap();
        let b = build_adjacency(&permuted(&e, &perm), eps).unwrap();
        prop_assert_eq!(a.num_edges(), b.num_edges());
        for (new, &old) in perm.iter().enumerate() {
            prop_assert_eq!(b.degree(new), a.degree(old));
        }
        let (ta, tb) = (triangles(&a), triangles(&b));
        let (ca, cb) = (clustering(&a), clustering(&b));
        for (new, &old) in perm.iter().enumerate() {
            prop_assert_eq!(tb[new], ta[old]);
            prop_assert_eq!(cb[new], ca[old]);
        }
    }

    #[test]
    fn longer_horizons_only_add_edges(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, eps) = random_ensemble(&mut rng);
        let idx: Vec<usize> = (0..e.n_times()).collect();
        let pre = build_adjacency_prefixes(&e, eps, &idx).unwrap();
        for w in pre.windows(2) {
            for (i, j) in w[0].edges() {
                prop_assert!(w[1].has_edge(i, j));
            }
            prop_assert!(w[0].num_edges() <= w[1].num_edges());
        }
        for (k, a) in pre.iter().enumerate() {
            prop_assert_eq!(dense(a), brute_adjacency(&e, eps, k));
        }
    }
}
