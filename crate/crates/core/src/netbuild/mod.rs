//! ε-proximity networks: trajectories `i != j` are linked iff
//! `|x_{i,t} - x_{j,t}| < ε` in at least one time slice.

mod index;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

pub use index::{slice_neighbors, SliceIndex};

use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};

/// Undirected simple graph in compressed sparse row form with sorted
/// neighbour lists; every edge is stored in both endpoint rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    n: usize,
    epsilon: f64,
    t_index_max: usize,
    t_max: f64,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl AdjacencyMatrix {
    /// Build from unordered pairs; duplicates are merged. Self-loops and
    /// out-of-range indices are rejected.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize)],
        epsilon: f64,
        t_index_max: usize,
        t_max: f64,
    ) -> Result<Self> {
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::Domain(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Domain(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            pairs.push((a.min(b) as u32, a.max(b) as u32));
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut upper_offsets = vec![0usize; n + 1];
        for &(a, _) in &pairs {
            upper_offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            upper_offsets[i + 1] += upper_offsets[i];
        }
        let upper: Vec<u32> = pairs.iter().map(|p| p.1).collect();
        Ok(Self::from_upper(
            n,
            &upper_offsets,
            &upper,
            |_| true,
            epsilon,
            t_index_max,
            t_max,
        ))
    }

    /// Symmetric CSR from per-node sorted lists of larger neighbours, keeping
    /// entries accepted by `keep` (called with the position in `upper`).
    fn from_upper(
        n: usize,
        upper_offsets: &[usize],
        upper: &[u32],
        keep: impl Fn(usize) -> bool,
        epsilon: f64,
        t_index_max: usize,
        t_max: f64,
    ) -> Self {
        let mut deg = vec![0usize; n];
        for i in 0..n {
            for p in upper_offsets[i]..upper_offsets[i + 1] {
                if keep(p) {
                    deg[i] += 1;
                    deg[upper[p] as usize] += 1;
                }
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        // Rows come out sorted: row j receives all i < j before its own
        // larger neighbours.
        for i in 0..n {
            for p in upper_offsets[i]..upper_offsets[i + 1] {
                if keep(p) {
                    let j = upper[p] as usize;
                    neighbors[fill[i]] = j as u32;
                    fill[i] += 1;
                    neighbors[fill[j]] = i as u32;
                    fill[j] += 1;
                }
            }
        }
        Self {
            n,
            epsilon,
            t_index_max,
            t_max,
            offsets,
            neighbors,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Last time slice included.
    pub fn t_index_max(&self) -> usize {
        self.t_index_max
    }

    /// Time stamp of the last slice included.
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn mean_degree(&self) -> f64 {
        self.neighbors.len() as f64 / self.n as f64
    }

    /// Number of connected components and the component id of every node,
    /// numbered in order of their smallest node.
    pub fn components(&self) -> (usize, Vec<u32>) {
        let mut label = vec![u32::MAX; self.n];
        let mut count = 0u32;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s as u32);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u as usize) {
                    if label[v as usize] == u32::MAX {
                        label[v as usize] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (count as usize, label)
    }

    pub fn is_connected(&self) -> bool {
        self.components().0 <= 1
    }

    /// Fail with the component count unless the graph is connected.
    pub fn require_connected(&self) -> Result<()> {
        match self.components().0 {
            0 | 1 => Ok(()),
            c => Err(Error::Disconnected { components: c }),
        }
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Edge list `i,j` with `i < j`, preceded by `#` comment lines recording
    /// the construction parameters.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# epsilon={}", self.epsilon)?;
        writeln!(w, "# t_max={}", self.t_max)?;
        writeln!(w, "# t_index_max={}", self.t_index_max)?;
        writeln!(w, "# n={}", self.n)?;
        writeln!(w, "# norm=euclidean")?;
        writeln!(w, "# ball=open")?;
        writeln!(w, "i,j")?;
        for (i, j) in self.edges() {
            writeln!(w, "{i},{j}")?;
        }
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(f))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut epsilon = f64::NAN;
        let mut t_max = f64::NAN;
        let mut t_index_max = 0usize;
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        let mut seen_header = false;
        for (k, line) in BufReader::new(r).lines().enumerate() {
            let lineno = k as u64 + 1;
            let line = line.map_err(|e| Error::Malformed {
                line: lineno,
                msg: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Malformed { line: lineno, msg };
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.trim().split_once('=') {
                    let value = value.trim();
                    match key.trim() {
                        "epsilon" => epsilon = value.parse().map_err(|_| bad(format!("bad epsilon {value:?}")))?,
                        "t_max" => t_max = value.parse().map_err(|_| bad(format!("bad t_max {value:?}")))?,
                        "t_index_max" => {
                            t_index_max = value.parse().map_err(|_| bad(format!("bad t_index_max {value:?}")))?
                        }
                        "n" => n = Some(value.parse().map_err(|_| bad(format!("bad node count {value:?}")))?),
                        _ => {}
                    }
                }
                continue;
            }
            if !seen_header {
                seen_header = true;
                if line.replace(' ', "") == "i,j" {
                    continue;
                }
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("expected `i,j`, got {line:?}")))?;
            let a: usize = a.trim().parse().map_err(|_| bad(format!("bad node index {a:?}")))?;
            let b: usize = b.trim().parse().map_err(|_| bad(format!("bad node index {b:?}")))?;
            edges.push((a, b));
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
        Self::from_edges(n, &edges, epsilon, t_index_max, t_max)
    }
}

/// For every linked pair, the first time slice in which the two trajectories
/// are ε-close. Stored per node as sorted lists of larger neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactTimes {
    n: usize,
    epsilon: f64,
    times: Vec<f64>,
    offsets: Vec<usize>,
    partner: Vec<u32>,
    first: Vec<u32>,
}

/// Nodes handled per work unit; each unit owns one marker array.
const NODE_BLOCK: usize = 256;

impl ContactTimes {
    /// Scan slices `0..=t_index_max` of `ens`.
    pub fn build(ens: &TrajectoryEnsemble, epsilon: f64, t_index_max: usize) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if t_index_max >= ens.n_times() {
            return Err(Error::Domain(format!(
                "time index {t_index_max} out of range for {} slices",
                ens.n_times()
            )));
        }
        let n = ens.n_traj();
        if n > u32::MAX as usize - 1 {
            return Err(Error::Domain(format!(
                "{n} trajectories exceed the supported node count"
            )));
        }
        let dim = ens.dim();
        let slices = t_index_max + 1;
        let indexes: Vec<SliceIndex> = (0..slices)
            .into_par_iter()
            .map(|t| SliceIndex::new(ens.slice(t), dim, epsilon))
            .collect();

        let blocks: Vec<(Vec<usize>, Vec<u32>, Vec<u32>)> = (0..n.div_ceil(NODE_BLOCK))
            .into_par_iter()
            .map(|b| {
                let lo = b * NODE_BLOCK;
                let hi = (lo + NODE_BLOCK).min(n);
                let mut mark = vec![u32::MAX; n];
                let mut counts = Vec::with_capacity(hi - lo);
                let mut partner = Vec::new();
                let mut first = Vec::new();
                let mut found: Vec<(u32, u32)> = Vec::new();
                for i in lo..hi {
                    found.clear();
                    for (t, index) in indexes.iter().enumerate() {
                        index.for_each_within(ens.point(t, i), epsilon, |j, _| {
                            if j as usize > i && mark[j as usize] != i as u32 {
                                mark[j as usize] = i as u32;
                                found.push((j, t as u32));
                            }
                        });
                    }
                    found.sort_unstable();
                    counts.push(found.len());
                    partner.extend(found.iter().map(|p| p.0));
                    first.extend(found.iter().map(|p| p.1));
                }
                (counts, partner, first)
            })
            .collect();

        let total: usize = blocks.iter().map(|b| b.1.len()).sum();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut partner = Vec::with_capacity(total);
        let mut first = Vec::with_capacity(total);
        for (counts, p, f) in blocks {
            for c in counts {
                offsets.push(offsets.last().unwrap() + c);
            }
            partner.extend_from_slice(&p);
            first.extend_from_slice(&f);
        }
        Ok(Self {
            n,
            epsilon,
            times: ens.times()[..slices].to_vec(),
            offsets,
            partner,
            first,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_index_max(&self) -> usize {
        self.times.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.partner.len()
    }

    /// `(j, first_slice)` for all linked `j > i`.
    pub fn contacts(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.partner[r.clone()]
            .iter()
            .zip(&self.first[r])
            .map(|(&j, &t)| (j as usize, t as usize))
    }

    /// The network of the prefix `0..=t_index`.
    pub fn adjacency_at(&self, t_index: usize) -> Result<AdjacencyMatrix> {
        if t_index > self.t_index_max() {
            return Err(Error::Domain(format!(
                "prefix {t_index} beyond scanned slices 0..={}",
                self.t_index_max()
            )));
        }
        let adj = AdjacencyMatrix::from_upper(
            self.n,
            &self.offsets,
            &self.partner,
            |p| self.first[p] as usize <= t_index,
            self.epsilon,
            t_index,
            self.times[t_index],
        );
        if adj.mean_degree() >= self.n as f64 / 2.0 && self.n > 2 {
            log::warn!(
                "epsilon {} links half of all node pairs (mean degree {:.1} of {} nodes)",
                self.epsilon,
                adj.mean_degree(),
                self.n
            );
        }
        Ok(adj)
    }
}

/// Network over all slices of `ens`.
pub fn build_adjacency(ens: &TrajectoryEnsemble, epsilon: f64) -> Result<AdjacencyMatrix> {
    let last = ens.n_times() - 1;
    ContactTimes::build(ens, epsilon, last)?.adjacency_at(last)
}

/// Networks of the growing prefixes `0..=t` for each `t` in `t_indices`,
/// from a single scan.
pub fn build_adjacency_prefixes(
    ens: &TrajectoryEnsemble,
    epsilon: f64,
    t_indices: &[usize],
) -> Result<Vec<AdjacencyMatrix>> {
    if t_indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("prefix time indices must be strictly increasing".into()));
    }
    let Some(&last) = t_indices.last() else {
        return Ok(Vec::new());
    };
    let contacts = ContactTimes::build(ens, epsilon, last)?;
    t_indices.iter().map(|&t| contacts.adjacency_at(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::generate_map_ensemble;

    fn ens(n: usize, slices: &[&[f64]]) -> TrajectoryEnsemble {
        let times = (0..slices.len()).map(|t| t as f64).collect();
        let pos = slices.iter().flat_map(|s| s.iter().copied()).collect();
        TrajectoryEnsemble::new(n, 1, times, pos).unwrap()
    }

    #[test]
    fn contact_in_any_slice_links() {
        let e = ens(3, &[&[0.0, 1.0, 5.0], &[0.0, 0.05, 5.0]]);
        let a = build_adjacency(&e, 0.1).unwrap();
        assert_eq!(a.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(a.degree(2), 0);
        assert_eq!(a.t_index_max(), 1);
    }

    #[test]
    fn far_apart_never_linked() {
        let e = ens(2, &[&[0.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(build_adjacency(&e, 0.5).unwrap().num_edges(), 0);
    }

    #[test]
    fn prefixes_are_nested() {
        let e = ens(
            4,
            &[&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.05, 2.0, 3.0], &[1.0, 1.05, 1.08, 3.0]],
        );
        let p = build_adjacency_prefixes(&e, 0.1, &[0, 1, 2]).unwrap();
        assert_eq!(p[0].num_edges(), 0);
        assert_eq!(p[1].edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(p[2].edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
        assert!(build_adjacency_prefixes(&e, 0.1, &[1, 1]).is_err());
    }

    #[test]
    fn initial_map_degree_is_eighteen() {
        let e = generate_map_ensemble(1000, 1).unwrap();
        let p = build_adjacency_prefixes(&e, 0.01, &[0]).unwrap();
        for i in 9..991 {
            assert_eq!(p[0].degree(i), 18, "node {i}");
        }
        assert_eq!(p[0].degree(0), 9);
    }

    #[test]
    fn csv_round_trip() {
        let a = AdjacencyMatrix::from_edges(5, &[(3, 1), (0, 4), (1, 3), (2, 0)], 0.25, 7, 0.7).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("# epsilon=0.25\n# t_max=0.7\n"));
        assert!(text.ends_with("i,j\n0,2\n0,4\n1,3\n"));
        let b = AdjacencyMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_self_loops_and_bad_rows() {
        assert!(AdjacencyMatrix::from_edges(3, &[(1, 1)], 1.0, 0, 0.0).is_err());
        assert!(AdjacencyMatrix::from_edges(3, &[(1, 3)], 1.0, 0, 0.0).is_err());
        match AdjacencyMatrix::read_csv("i,j\n0,1\n0;2\n".as_bytes()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn components_and_connectivity() {
        let a = AdjacencyMatrix::from_edges(5, &[(0, 1), (3, 4)], 1.0, 0, 0.0).unwrap();
        let (c, label) = a.components();
        assert_eq!(c, 3);
        assert_eq!(label, vec![0, 0, 1, 2, 2]);
        assert!(matches!(
            a.require_connected(),
            Err(Error::Disconnected { components: 3 })
        ));
    }
}
