use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netbuild::SliceIndex;
use crate::rng;

/// Largest cloud diagonalised with a dense solver under [`EigenSolver::Auto`].
pub const DENSE_LIMIT: usize = 2000;
const LANCZOS_TOL: f64 = 1e-10;
const LANCZOS_MAX_STEPS: usize = 800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSolver {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionParams {
    /// Kernel scale in `exp(-r^2 / eps_dm)`.
    pub eps_dm: f64,
    /// Number of nontrivial eigenvectors kept.
    pub m: usize,
    pub cutoff_radius: f64,
    pub solver: EigenSolver,
    /// Clouds larger than this are coarse-grained onto a grid of cells of
    /// width `bin_width` before embedding.
    pub max_exact: usize,
    pub bin_width: f64,
    /// Seed of the eigensolver start vector.
    pub seed: u64,
}

impl DiffusionParams {
    pub fn new(eps_dm: f64, m: usize) -> Self {
        Self {
            eps_dm,
            m,
            cutoff_radius: 3.0 * eps_dm.sqrt(),
            bin_width: 0.1 * eps_dm.sqrt(),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps_dm > 0.0) || !self.eps_dm.is_finite() {
            return Err(Error::Domain(format!("eps_dm must be positive, got {}", self.eps_dm)));
        }
        if self.m == 0 {
            return Err(Error::Domain("m must be at least 1".into()));
        }
        if !(self.cutoff_radius > 0.0) || !self.cutoff_radius.is_finite() {
            return Err(Error::Domain(format!(
                "cutoff radius must be positive, got {}",
                self.cutoff_radius
            )));
        }
        if !(self.bin_width > 0.0) || !(self.bin_width < self.cutoff_radius / 2.0) {
            return Err(Error::Domain(format!(
                "bin width must lie in (0, cutoff / 2), got {}",
                self.bin_width
            )));
        }
        Ok(())
    }
}

impl Default for DiffusionParams {
    fn default() -> Self {
        Self {
            eps_dm: 0.01,
            m: 7,
            cutoff_radius: 0.3,
            solver: EigenSolver::Auto,
            max_exact: 25_000,
            bin_width: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionEmbedding {
    pub n: usize,
    pub m: usize,
    /// Point-major, `m` coordinates per point.
    pub coords: Vec<f64>,
    /// Nontrivial eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Connected components of the kernel graph.
    pub components: usize,
    /// Number of occupied cells when the cloud was coarse-grained.
    pub bins: Option<usize>,
}

impl DiffusionEmbedding {
    pub fn coord(&self, i: usize, j: usize) -> f64 {
        self.coords[i * self.m + j]
    }
}

/// Truncated Gaussian kernel in CSR form, rows sorted, diagonal included.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    pub offsets: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl Kernel {
    pub fn build(points: &[f64], dim: usize, eps: f64, cutoff: f64) -> Self {
        let n = points.len() / dim;
        let index = SliceIndex::new(points, dim, cutoff);
        let rows: Vec<Vec<(u32, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::new();
                index.for_each_within(&points[i * dim..(i + 1) * dim], cutoff, |j, d2| {
                    row.push((j, (-d2 / eps).exp()))
                });
                row.sort_unstable_by_key(|e| e.0);
                row
            })
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let total: usize = rows.iter().map(Vec::len).sum();
        let (mut cols, mut vals) = (Vec::with_capacity(total), Vec::with_capacity(total));
        for row in rows {
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Self { offsets, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Component label per point, numbered in order of first appearance.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in self.row(u).0 {
                    if label[v as usize] == usize::MAX {
                        label[v as usize] = count;
                        stack.push(v as usize);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }
}

/// Diffusion-map coordinates of a point cloud (point-major, `dim` columns).
///
/// Eigenvectors `u` of `D^{-1/2} K D^{-1/2}` give right eigenvectors
/// `psi = D^{-1/2} u` of the row-stochastic operator `D^{-1} K`; coordinate
/// `j` is `lambda_j psi_j` for the `m` largest nontrivial eigenvalues. The
/// first entry of each coordinate that is not negligible is made positive.
///
/// Clouds with more than `max_exact` points are replaced by the centroids of
/// the occupied cells of a grid of width `bin_width`, each weighted by its
/// number of points, and the coordinates are extended back to every point.
pub fn diffusion_maps(points: &[f64], dim: usize, params: &DiffusionParams) -> Result<DiffusionEmbedding> {
    params.validate()?;
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::Shape(format!(
            "{} values do not form points of dimension {dim}",
            points.len()
        )));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("point cloud contains non-finite values".into()));
    }
    let n = points.len() / dim;
    if n <= params.m {
        return Err(Error::Domain(format!(
            "need more than m = {} points, got {n}",
            params.m
        )));
    }
    if n <= params.max_exact {
        return weighted(points, &vec![1.0; n], dim, params);
    }

    let (centers, weights) = coarse_grain(points, dim, params.bin_width);
    let bins = weights.len();
    log::info!("diffusion maps: {n} points coarse-grained onto {bins} cells");
    if bins <= params.m {
        return Err(Error::Domain(format!(
            "only {bins} occupied cells for m = {}",
            params.m
        )));
    }
    let base = weighted(&centers, &weights, dim, params)?;
    Ok(DiffusionEmbedding {
        n,
        m: base.m,
        coords: extend(points, dim, &centers, &weights, &base, params),
        eigenvalues: base.eigenvalues,
        components: base.components,
        bins: Some(bins),
    })
}

/// Centroids and point counts of the occupied grid cells, in cell order.
fn coarse_grain(points: &[f64], dim: usize, width: f64) -> (Vec<f64>, Vec<f64>) {
    let mut keyed: Vec<(Vec<i64>, usize)> = points
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, p)| (p.iter().map(|x| (x / width).floor() as i64).collect(), i))
        .collect();
    keyed.sort_unstable();
    let (mut centers, mut weights) = (Vec::new(), Vec::new());
    for group in keyed.chunk_by(|a, b| a.0 == b.0) {
        let mut c = vec![0.0; dim];
        for (_, i) in group {
            c.iter_mut()
                .zip(&points[i * dim..(i + 1) * dim])
                .for_each(|(s, x)| *s += x);
        }
        centers.extend(c.iter().map(|s| s / group.len() as f64));
        weights.push(group.len() as f64);
    }
    (centers, weights)
}

/// Extend `lambda psi` from weighted centres to arbitrary points:
/// `sum_b k(x, c_b) w_b psi_b / sum_b k(x, c_b) w_b`.
fn extend(
    points: &[f64],
    dim: usize,
    centers: &[f64],
    weights: &[f64],
    base: &DiffusionEmbedding,
    params: &DiffusionParams,
) -> Vec<f64> {
    let m = base.m;
    let psi: Vec<f64> = base
        .coords
        .chunks_exact(m)
        .flat_map(|c| c.iter().zip(&base.eigenvalues).map(|(x, l)| x / l))
        .collect();
    let index = SliceIndex::new(centers, dim, params.cutoff_radius);
    points
        .par_chunks_exact(dim)
        .flat_map_iter(|p| {
            let mut acc = vec![0.0; m];
            let mut wsum = 0.0;
            index.for_each_within(p, params.cutoff_radius, |b, d2| {
                let w = (-d2 / params.eps_dm).exp() * weights[b as usize];
                wsum += w;
                for (a, v) in acc.iter_mut().zip(&psi[b as usize * m..(b as usize + 1) * m]) {
                    *a += w * v;
                }
            });
            // Every point lies within one cell diagonal of its own centroid.
            acc.into_iter().map(move |a| a / wsum)
        })
        .collect()
}

/// Embedding of points carrying weights `w`: the Markov operator is
/// `D^{-1} K W` with `D = diag(K w)`, symmetrised by `(D W)^{1/2}`.
fn weighted(points: &[f64], w: &[f64], dim: usize, params: &DiffusionParams) -> Result<DiffusionEmbedding> {
    let n = points.len() / dim;
    let m = params.m;
    let kernel = Kernel::build(points, dim, params.eps_dm, params.cutoff_radius);
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let (c, v) = kernel.row(i);
            c.iter().zip(v).map(|(&j, &k)| k * w[j as usize]).sum()
        })
        .collect();
    let root: Vec<f64> = d.iter().zip(w).map(|(a, b)| (a * b).sqrt()).collect();
    let (components, label) = kernel.components();
    if components > 1 {
        log::warn!("diffusion kernel graph has {components} connected components");
    }

    // Per-component trivial vectors sqrt(d w) restricted to the component.
    // Their span is the eigenvalue-1 eigenspace; the global one is dropped and
    // the rest is orthonormalised against it.
    let mut trivial: Vec<Vec<f64>> = (0..components).map(|_| vec![0.0; n]).collect();
    for i in 0..n {
        trivial[label[i]][i] = root[i];
    }
    let mut global = root.clone();
    normalize(&mut global);
    let mut basis = vec![global];
    for mut v in trivial.into_iter().take(components - 1) {
        orthogonalize(&mut v, &basis);
        orthogonalize(&mut v, &basis);
        normalize(&mut v);
        basis.push(v);
    }
    let known = (components - 1).min(m);
    let mut values = vec![1.0; known];
    let mut vectors: Vec<Vec<f64>> = basis[1..=known].to_vec();

    let rest = m - known;
    if rest > 0 {
        let s = scaled(&kernel, &root, w);
        let use_dense = match params.solver {
            EigenSolver::Dense => true,
            EigenSolver::Lanczos => false,
            EigenSolver::Auto => n <= DENSE_LIMIT,
        };
        let (vals, vecs) = if use_dense {
            dense_top(&s, &basis, rest)
        } else {
            lanczos_top(&s, &basis, rest, params.seed)?
        };
        values.extend(vals);
        vectors.extend(vecs);
    }

    let mut coords = vec![0.0; n * m];
    for (j, (u, &lambda)) in vectors.iter().zip(&values).enumerate() {
        let mut psi: Vec<f64> = u.iter().zip(&root).map(|(a, r)| lambda * a / r).collect();
        fix_sign(&mut psi);
        for i in 0..n {
            coords[i * m + j] = psi[i];
        }
    }
    Ok(DiffusionEmbedding {
        n,
        m,
        coords,
        eigenvalues: values,
        components,
        bins: None,
    })
}

/// The symmetric operator `(W/D)^{1/2} K (W/D)^{1/2}` on the kernel's
/// pattern, given `root = sqrt(d w)`.
fn scaled(kernel: &Kernel, root: &[f64], w: &[f64]) -> Kernel {
    let f: Vec<f64> = root.iter().zip(w).map(|(r, w)| w / r).collect();
    let mut vals = kernel.vals.clone();
    for i in 0..kernel.n() {
        for k in kernel.offsets[i]..kernel.offsets[i + 1] {
            vals[k] *= f[i] * f[kernel.cols[k] as usize];
        }
    }
    Kernel {
        offsets: kernel.offsets.clone(),
        cols: kernel.cols.clone(),
        vals,
    }
}

fn spmv(s: &Kernel, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().enumerate().for_each(|(i, out)| {
        let (c, v) = s.row(i);
        *out = c.iter().zip(v).map(|(&j, &a)| a * x[j as usize]).sum();
    });
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let c = dot(v, q);
        v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
    }
}

fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Top `count` eigenpairs of `s` on the complement of `deflate`.
fn dense_top(s: &Kernel, deflate: &[Vec<f64>], count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = s.n();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (c, v) = s.row(i);
        for (&j, &x) in c.iter().zip(v) {
            a[(i, j as usize)] = x;
        }
    }
    // Push the known eigenvectors below the spectrum of `s`, which lies in
    // [-1, 1].
    for q in deflate {
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= 3.0 * q[i] * q[j];
            }
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    order
        .into_iter()
        .take(count)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
        .unzip()
}

/// Top `count` eigenpairs of `s` on the complement of `deflate` by Lanczos
/// iteration with full reorthogonalisation. Breakdowns restart from a fresh
/// random vector.
fn lanczos_top(s: &Kernel, deflate: &[Vec<f64>], count: usize, seed: u64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = s.n();
    let dim = n - deflate.len();
    if count > dim {
        return Err(Error::Domain(format!(
            "asked for {count} eigenvectors of a {dim}-dimensional space"
        )));
    }
    let max_steps = dim.min(LANCZOS_MAX_STEPS);
    let mut r = rng::stream(seed, 2);
    let mut fresh = |q: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..4 {
            let mut v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            for _ in 0..2 {
                orthogonalize(&mut v, deflate);
                orthogonalize(&mut v, q);
            }
            if normalize(&mut v) > 1e-8 {
                return Some(v);
            }
        }
        None
    };

    let mut q: Vec<Vec<f64>> = vec![fresh(&[]).expect("nonempty complement")];
    let (mut alpha, mut beta) = (Vec::<f64>::new(), Vec::<f64>::new());
    let mut w = vec![0.0; n];
    loop {
        let j = q.len() - 1;
        spmv(s, &q[j], &mut w);
        let a = dot(&w, &q[j]);
        alpha.push(a);
        for _ in 0..2 {
            orthogonalize(&mut w, deflate);
            orthogonalize(&mut w, &q);
        }
        let b = dot(&w, &w).sqrt();
        let steps = q.len();
        if steps >= count && (steps % 10 == 0 || steps == max_steps || b < 1e-12) {
            let (theta, y) = tridiagonal_eigen(&alpha, &beta);
            let converged = (0..count).all(|k| (b * y[(steps - 1, k)]).abs() <= LANCZOS_TOL * theta[k].abs().max(1.0));
            if converged || steps == max_steps {
                if !converged {
                    return Err(Error::NoConvergence(format!(
                        "{count} eigenpairs after {steps} Lanczos steps"
                    )));
                }
                let vecs = (0..count)
                    .map(|k| {
                        let mut v = vec![0.0; n];
                        for (i, qi) in q.iter().enumerate() {
                            let c = y[(i, k)];
                            v.iter_mut().zip(qi).for_each(|(x, z)| *x += c * z);
                        }
                        normalize(&mut v);
                        v
                    })
                    .collect();
                return Ok((theta[..count].to_vec(), vecs));
            }
        }
        if steps == max_steps {
            return Err(Error::NoConvergence(format!(
                "Krylov space exhausted after {steps} steps"
            )));
        }
        if b < 1e-12 {
            let v = fresh(&q).ok_or_else(|| Error::NoConvergence("cannot extend the Krylov basis".into()))?;
            beta.push(0.0);
            q.push(v);
        } else {
            beta.push(b);
            q.push(w.iter().map(|x| x / b).collect());
        }
    }
}

/// Eigenvalues (descending) and eigenvectors of the symmetric tridiagonal
/// matrix with diagonal `alpha` and off-diagonal `beta`.
fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn params(eps: f64, m: usize) -> DiffusionParams {
        DiffusionParams {
            max_exact: 5000,
            ..DiffusionParams::new(eps, m)
        }
    }

    #[test]
    fn coordinates_are_markov_eigenvectors() {
        let pts = [0.0, 0.0, 0.1, 0.0, 0.0, 0.15];
        let eps = 0.02;
        let emb = diffusion_maps(&pts, 2, &params(eps, 2)).unwrap();
        let mut k = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let d2: f64 = (0..2).map(|a| (pts[2 * i + a] - pts[2 * j + a]).powi(2)).sum();
                k[i][j] = (-d2 / eps).exp();
            }
        }
        for j in 0..2 {
            let lambda = emb.eigenvalues[j];
            for i in 0..3 {
                let di: f64 = k[i].iter().sum();
                let p_psi: f64 = (0..3).map(|l| k[i][l] / di * emb.coord(l, j)).sum();
                assert!((p_psi - lambda * emb.coord(i, j)).abs() < 1e-8);
            }
        }
        assert!(emb.eigenvalues[0] >= emb.eigenvalues[1]);
        assert!(emb.eigenvalues[0] < 1.0);
    }

    #[test]
    fn separated_clusters_split_by_sign() {
        let mut r = rng::stream(3, 0);
        let mut pts = Vec::new();
        for c in [0.0, 5.0] {
            for _ in 0..30 {
                pts.push(c + r.random_range(0.0..0.05));
                pts.push(r.random_range(0.0..0.05));
            }
        }
        let emb = diffusion_maps(&pts, 2, &params(0.01, 3)).unwrap();
        assert_eq!(emb.components, 2);
        assert_eq!(emb.eigenvalues[0], 1.0);
        assert!((0..30).all(|i| emb.coord(i, 0) > 0.0));
        assert!((30..60).all(|i| emb.coord(i, 0) < 0.0));
    }

    fn cloud(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n)
            .flat_map(|_| {
                let t: f64 = r.random_range(0.0..1.0);
                [3.0 * t, (6.0 * t).sin() + r.random_range(-0.2..0.2)]
            })
            .collect()
    }

    #[test]
    fn lanczos_matches_dense() {
        let pts = cloud(400, 8);
        let mut p = params(0.05, 5);
        p.solver = EigenSolver::Dense;
        let a = diffusion_maps(&pts, 2, &p).unwrap();
        p.solver = EigenSolver::Lanczos;
        let b = diffusion_maps(&pts, 2, &p).unwrap();
        assert_eq!(a.components, 1);
        for j in 0..5 {
            assert!((a.eigenvalues[j] - b.eigenvalues[j]).abs() < 1e-8);
            for i in 0..400 {
                assert!((a.coord(i, j) - b.coord(i, j)).abs() < 1e-6, "coordinate {j} at {i}");
            }
        }
    }

    #[test]
    fn translation_invariant() {
        let pts = cloud(300, 2);
        let shifted: Vec<f64> = pts
            .iter()
            .enumerate()
            .map(|(k, x)| x + if k % 2 == 0 { 10.0 } else { -4.0 })
            .collect();
        let a = diffusion_maps(&pts, 2, &params(0.05, 3)).unwrap();
        let b = diffusion_maps(&shifted, 2, &params(0.05, 3)).unwrap();
        for j in 0..3 {
            assert!((a.eigenvalues[j] - b.eigenvalues[j]).abs() < 1e-8);
            for i in 0..300 {
                assert!((a.coord(i, j).abs() - b.coord(i, j).abs()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn noisy_circle_ordering() {
        let mut r = rng::stream(5, 0);
        let n = 500;
        let angles: Vec<f64> = (0..n).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
        let pts: Vec<f64> = angles
            .iter()
            .flat_map(|&a| {
                let rad = 1.0 + r.random_range(-0.02..0.02);
                [rad * a.cos(), rad * a.sin()]
            })
            .collect();
        let emb = diffusion_maps(&pts, 2, &params(0.01, 2)).unwrap();
        let est: Vec<f64> = (0..n).map(|i| emb.coord(i, 1).atan2(emb.coord(i, 0))).collect();
        // The embedded angle equals the true one up to rotation and reflection.
        let best = [1.0, -1.0]
            .iter()
            .map(|&s| {
                let (c, sn) = angles.iter().zip(&est).fold((0.0, 0.0), |acc, (a, e)| {
                    (acc.0 + (e - s * a).cos(), acc.1 + (e - s * a).sin())
                });
                (c * c + sn * sn).sqrt() / n as f64
            })
            .fold(0.0, f64::max);
        assert!(best > 0.95, "{best}");
    }

    #[test]
    fn fine_bins_reproduce_exact_embedding() {
        let pts = cloud(600, 4);
        let exact = diffusion_maps(&pts, 2, &params(0.05, 3)).unwrap();
        let mut p = params(0.05, 3);
        p.max_exact = 100;
        p.bin_width = 1e-9;
        let binned = diffusion_maps(&pts, 2, &p).unwrap();
        assert_eq!(binned.bins, Some(600));
        for j in 0..3 {
            assert!((exact.eigenvalues[j] - binned.eigenvalues[j]).abs() < 1e-10);
            let s = (exact.coord(0, j) * binned.coord(0, j)).signum();
            for i in 0..600 {
                assert!((exact.coord(i, j) - s * binned.coord(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn coarse_bins_approximate_exact_embedding() {
        let pts = cloud(3000, 4);
        let exact = diffusion_maps(&pts, 2, &params(0.05, 2)).unwrap();
        let mut p = params(0.05, 2);
        p.max_exact = 1000;
        let binned = diffusion_maps(&pts, 2, &p).unwrap();
        assert!(binned.bins.unwrap() < 3000);
        for j in 0..2 {
            assert!((exact.eigenvalues[j] - binned.eigenvalues[j]).abs() < 1e-3);
            let (a, b): (Vec<f64>, Vec<f64>) = (0..3000).map(|i| (exact.coord(i, j), binned.coord(i, j))).unzip();
            let corr = pearson(&a, &b);
            assert!(corr.abs() > 0.99, "{corr}");
        }
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(diffusion_maps(&[0.0, 1.0], 2, &params(0.1, 1)).is_err());
        assert!(diffusion_maps(&[0.0; 10], 2, &params(-1.0, 1)).is_err());
        assert!(diffusion_maps(&[0.0; 10], 3, &params(0.1, 1)).is_err());
    }
}
