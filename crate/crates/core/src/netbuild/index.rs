//! Uniform-cell spatial index over the points of one time slice.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

type CellKey = SmallVec<[i64; 4]>;

/// Cells beyond this many per point switch the index to a hash map.
const DENSE_CELLS_PER_POINT: usize = 16;

#[derive(Debug, Clone)]
enum Cells {
    /// Cell grid over the bounding box, first axis fastest. `starts[c]` is the
    /// first sorted position of cell `c`; one sentinel entry at the end.
    Dense {
        lo: CellKey,
        extent: SmallVec<[usize; 4]>,
        starts: Vec<u32>,
    },
    /// Occupied cells only.
    Hashed(FxHashMap<CellKey, (u32, u32)>),
}

/// Points bucketed by `floor(x / cell_size)` per coordinate.
///
/// Within the sorted storage cells are ordered with the first axis varying
/// fastest, so the cells of one row along axis 0 form a contiguous run.
#[derive(Debug, Clone)]
pub struct SliceIndex {
    dim: usize,
    cell: f64,
    ids: Vec<u32>,
    coords: Vec<f64>,
    cells: Cells,
}

#[inline]
fn cell_coord(x: f64, cell: f64) -> i64 {
    (x / cell).floor() as i64
}

impl SliceIndex {
    /// Index `points` (point-major, `dim` coordinates each).
    pub fn new(points: &[f64], dim: usize, cell_size: f64) -> Self {
        assert!(dim > 0 && points.len() % dim == 0, "bad point layout");
        assert!(cell_size > 0.0 && cell_size.is_finite(), "cell size must be positive");
        let n = points.len() / dim;
        assert!(n <= u32::MAX as usize, "too many points");
        let keys: Vec<CellKey> = points
            .chunks_exact(dim)
            .map(|p| p.iter().map(|&x| cell_coord(x, cell_size)).collect())
            .collect();

        let mut lo: CellKey = SmallVec::from_elem(i64::MAX, dim);
        let mut hi: CellKey = SmallVec::from_elem(i64::MIN, dim);
        for k in &keys {
            for a in 0..dim {
                lo[a] = lo[a].min(k[a]);
                hi[a] = hi[a].max(k[a]);
            }
        }
        let mut total: Option<usize> = Some(1);
        let extent: SmallVec<[usize; 4]> = (0..dim)
            .map(|a| {
                let e = if n == 0 { 1 } else { (hi[a] - lo[a]) as u64 as usize + 1 };
                total = total.and_then(|t| t.checked_mul(e));
                e
            })
            .collect();
        let dense = total.is_some_and(|t| t <= DENSE_CELLS_PER_POINT * n + 4096);

        if dense {
            let total = total.unwrap();
            let linear: Vec<usize> = keys
                .iter()
                .map(|k| {
                    let mut l = 0;
                    for a in (0..dim).rev() {
                        l = l * extent[a] + (k[a] - lo[a]) as usize;
                    }
                    l
                })
                .collect();
            let mut starts = vec![0u32; total + 1];
            for &l in &linear {
                starts[l + 1] += 1;
            }
            for c in 0..total {
                starts[c + 1] += starts[c];
            }
            let mut fill = starts.clone();
            let mut ids = vec![0u32; n];
            let mut coords = vec![0.0; n * dim];
            for (i, &l) in linear.iter().enumerate() {
                let at = fill[l] as usize;
                fill[l] += 1;
                ids[at] = i as u32;
                coords[at * dim..(at + 1) * dim].copy_from_slice(&points[i * dim..(i + 1) * dim]);
            }
            Self {
                dim,
                cell: cell_size,
                ids,
                coords,
                cells: Cells::Dense { lo, extent, starts },
            }
        } else {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&a, &b| {
                keys[a as usize]
                    .iter()
                    .rev()
                    .cmp(keys[b as usize].iter().rev())
                    .then(a.cmp(&b))
            });
            let mut map: FxHashMap<CellKey, (u32, u32)> = FxHashMap::default();
            let mut coords = Vec::with_capacity(n * dim);
            for (at, &i) in order.iter().enumerate() {
                let i = i as usize;
                coords.extend_from_slice(&points[i * dim..(i + 1) * dim]);
                map.entry(keys[i].clone())
                    .and_modify(|r| r.1 = at as u32 + 1)
                    .or_insert((at as u32, at as u32 + 1));
            }
            Self {
                dim,
                cell: cell_size,
                ids: order,
                coords,
                cells: Cells::Hashed(map),
            }
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.cells, Cells::Dense { .. })
    }

    /// Integer cell coordinates of a point.
    pub fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|&x| cell_coord(x, self.cell)).collect()
    }

    /// Call `f(id, squared_distance)` for every indexed point strictly closer
    /// than `radius` to `q`.
    pub fn for_each_within<F: FnMut(u32, f64)>(&self, q: &[f64], radius: f64, mut f: F) {
        let r2 = radius * radius;
        match self.dim {
            1 => self.for_each_run(q, radius, |s, e| self.scan::<1, F>(q, r2, s, e, &mut f)),
            2 => self.for_each_run(q, radius, |s, e| self.scan::<2, F>(q, r2, s, e, &mut f)),
            3 => self.for_each_run(q, radius, |s, e| self.scan::<3, F>(q, r2, s, e, &mut f)),
            _ => self.for_each_run(q, radius, |s, e| self.scan_any(q, r2, s, e, &mut f)),
        }
    }

    /// Ids strictly closer than `radius` to `q`, ascending.
    pub fn within(&self, q: &[f64], radius: f64) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_within(q, radius, |j, _| out.push(j));
        out.sort_unstable();
        out
    }

    #[inline]
    fn scan<const D: usize, F: FnMut(u32, f64)>(&self, q: &[f64], r2: f64, s: usize, e: usize, f: &mut F) {
        let q: [f64; D] = std::array::from_fn(|k| q[k]);
        for (p, &id) in self.coords[s * D..e * D].chunks_exact(D).zip(&self.ids[s..e]) {
            let mut d2 = 0.0;
            for k in 0..D {
                let d = p[k] - q[k];
                d2 += d * d;
            }
            if d2 < r2 {
                f(id, d2);
            }
        }
    }

    fn scan_any<F: FnMut(u32, f64)>(&self, q: &[f64], r2: f64, s: usize, e: usize, f: &mut F) {
        let d = self.dim;
        for (p, &id) in self.coords[s * d..e * d].chunks_exact(d).zip(&self.ids[s..e]) {
            let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < r2 {
                f(id, d2);
            }
        }
    }

    /// Visit the sorted-storage runs `[start, end)` covering every cell that
    /// can hold a point within `radius` of `q`.
    fn for_each_run<G: FnMut(usize, usize)>(&self, q: &[f64], radius: f64, mut g: G) {
        let d = self.dim;
        // Slightly widened so rounding in the cell arithmetic never drops a cell.
        let reach = radius * (1.0 + 1e-9);
        let mut qlo: CellKey = q.iter().map(|&x| cell_coord(x - reach, self.cell)).collect();
        let mut qhi: CellKey = q.iter().map(|&x| cell_coord(x + reach, self.cell)).collect();
        match &self.cells {
            Cells::Dense { lo, extent, starts } => {
                for a in 0..d {
                    qlo[a] = qlo[a].max(lo[a]);
                    qhi[a] = qhi[a].min(lo[a] + extent[a] as i64 - 1);
                    if qlo[a] > qhi[a] {
                        return;
                    }
                }
                let mut cur = qlo.clone();
                loop {
                    let mut base = 0usize;
                    for a in (1..d).rev() {
                        base = base * extent[a] + (cur[a] - lo[a]) as usize;
                    }
                    base *= extent[0];
                    let s = starts[base + (qlo[0] - lo[0]) as usize] as usize;
                    let e = starts[base + (qhi[0] - lo[0]) as usize + 1] as usize;
                    if s < e {
                        g(s, e);
                    }
                    if !advance(&mut cur, &qlo, &qhi) {
                        break;
                    }
                }
            }
            Cells::Hashed(map) => {
                let mut cur = qlo.clone();
                let mut key = qlo.clone();
                loop {
                    let (mut s, mut e) = (u32::MAX, 0u32);
                    key[1..].copy_from_slice(&cur[1..]);
                    for c0 in qlo[0]..=qhi[0] {
                        key[0] = c0;
                        if let Some(&(a, b)) = map.get(&key) {
                            s = s.min(a);
                            e = e.max(b);
                        }
                    }
                    if s < e {
                        g(s as usize, e as usize);
                    }
                    if !advance(&mut cur, &qlo, &qhi) {
                        break;
                    }
                }
            }
        }
    }
}

/// Odometer step over axes `1..d`; false when exhausted.
fn advance(cur: &mut CellKey, lo: &CellKey, hi: &CellKey) -> bool {
    for a in 1..cur.len() {
        if cur[a] < hi[a] {
            cur[a] += 1;
            return true;
        }
        cur[a] = lo[a];
    }
    false
}

/// Indices `j != query` with `|x_j - x_query| < epsilon` in one slice, ascending.
pub fn slice_neighbors(slice: &[f64], dim: usize, epsilon: f64, query: usize) -> Vec<usize> {
    let index = SliceIndex::new(slice, dim, epsilon);
    let q = &slice[query * dim..(query + 1) * dim];
    index
        .within(q, epsilon)
        .into_iter()
        .map(|j| j as usize)
        .filter(|&j| j != query)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[f64], dim: usize, eps: f64, q: usize) -> Vec<usize> {
        let x = &points[q * dim..(q + 1) * dim];
        (0..points.len() / dim)
            .filter(|&j| {
                j != q && {
                    let y = &points[j * dim..(j + 1) * dim];
                    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < eps * eps
                }
            })
            .collect()
    }

    #[test]
    fn isolated_point() {
        let pts = [0.0, 0.0, 5.0, 5.0];
        assert!(slice_neighbors(&pts, 2, 1.0, 0).is_empty());
    }

    #[test]
    fn boundary_distance_is_excluded() {
        let pts = [0.0, 0.0, 0.5, 0.0, 0.0, 0.4999999];
        assert_eq!(slice_neighbors(&pts, 2, 0.5, 0), vec![2]);
        let pts = [0.0, 0.0, 3.0, 4.0];
        assert!(slice_neighbors(&pts, 2, 5.0, 0).is_empty());
    }

    #[test]
    fn negative_coordinates() {
        let pts = [-0.05, 0.01, -0.001, 0.0];
        assert_eq!(slice_neighbors(&pts, 1, 0.1, 0), vec![1, 2, 3]);
        assert_eq!(slice_neighbors(&pts, 1, 0.05, 0), vec![2]);
    }

    #[test]
    fn sparse_outliers_use_hashing() {
        let pts = [0.0, 0.0, 1e6, 1e6, 1e6 + 0.5, 1e6];
        let idx = SliceIndex::new(&pts, 2, 1.0);
        assert!(!idx.is_dense());
        assert_eq!(idx.within(&[1e6, 1e6], 1.0), vec![1, 2]);
        assert_eq!(slice_neighbors(&pts, 2, 1.0, 0), Vec::<usize>::new());
    }

    #[test]
    fn larger_query_radius_than_cell() {
        let pts: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let idx = SliceIndex::new(&pts, 1, 0.1);
        assert_eq!(idx.within(&[2.0], 0.35), vec![17, 18, 19, 20, 21, 22, 23]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            dim in 1usize..4,
            n in 1usize..80,
            eps in 0.02f64..0.5,
            seed in any::<u64>(),
            spread in prop_oneof![Just(1.0f64), Just(1e4)],
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-spread..spread)).collect();
            for q in 0..n {
                prop_assert_eq!(slice_neighbors(&pts, dim, eps, q), brute(&pts, dim, eps, q));
            }
        }

        #[test]
        fn lattice_points_match_brute_force(n in 2usize..30, k in 1usize..5) {
            // Many exact ties on cell boundaries.
            let h = 0.1;
            let pts: Vec<f64> = (0..n * n).flat_map(|i| [(i % n) as f64 * h, (i / n) as f64 * h]).collect();
            let eps = k as f64 * h;
            for q in 0..n * n {
                prop_assert_eq!(slice_neighbors(&pts, 2, eps, q), brute(&pts, 2, eps, q));
            }
        }
    }
}
