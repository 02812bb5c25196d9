//! Local network measures over an [`AdjacencyMatrix`].
//!
//! Entries that are undefined for a node (for example the clustering
//! coefficient of a node with fewer than two neighbours) are `None`, never 0.

mod centrality;
mod local;

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

pub use centrality::{betweenness, betweenness_sampled, closeness};
pub use local::{avg_nn_degree, clustering, clustering_simplified, degree, degree_anomaly, triangles};

use crate::error::{Error, Result};
use crate::netbuild::AdjacencyMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetweennessMode {
    Skip,
    Exact,
    Sampled { pivots: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureOptions {
    pub closeness: bool,
    pub betweenness: BetweennessMode,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            closeness: false,
            betweenness: BetweennessMode::Skip,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMeasureTable {
    pub n: usize,
    pub degree: Vec<u32>,
    pub avg_nn_degree: Vec<Option<f64>>,
    pub degree_anomaly: Vec<Option<f64>>,
    pub clustering: Vec<Option<f64>>,
    pub clustering_simplified: Vec<Option<f64>>,
    /// `None` when not requested.
    pub closeness: Option<Vec<f64>>,
    pub betweenness: Option<Vec<f64>>,
}

pub const MEASURE_CSV_HEADER: &str =
    "node,degree,avg_nn_degree,degree_anomaly,clustering,clustering_simplified,closeness,betweenness";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl NodeMeasureTable {
    pub fn compute(a: &AdjacencyMatrix, opts: &MeasureOptions) -> Result<Self> {
        let tri = triangles(a);
        let avg = avg_nn_degree(a);
        let anomaly = avg
            .iter()
            .enumerate()
            .map(|(i, nn)| nn.map(|v| a.degree(i) as f64 - v))
            .collect();
        let closeness = if opts.closeness { Some(closeness(a)?) } else { None };
        let betweenness = match opts.betweenness {
            BetweennessMode::Skip => None,
            BetweennessMode::Exact => Some(betweenness(a)?),
            BetweennessMode::Sampled { pivots, seed } => Some(betweenness_sampled(a, pivots, seed)?),
        };
        Ok(Self {
            n: a.n(),
            degree: degree(a),
            avg_nn_degree: avg,
            degree_anomaly: anomaly,
            clustering: local::clustering_from(a, &tri),
            clustering_simplified: local::clustering_simplified_from(a, &tri),
            closeness,
            betweenness,
        })
    }

    pub fn get(&self, which: Measure, i: usize) -> Option<f64> {
        match which {
            Measure::Degree => Some(self.degree[i] as f64),
            Measure::AvgNnDegree => self.avg_nn_degree[i],
            Measure::DegreeAnomaly => self.degree_anomaly[i],
            Measure::Clustering => self.clustering[i],
            Measure::ClusteringSimplified => self.clustering_simplified[i],
            Measure::Closeness => self.closeness.as_ref().map(|c| c[i]),
            Measure::Betweenness => self.betweenness.as_ref().map(|b| b[i]),
        }
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }

    /// Parse the format written by [`write_csv`](Self::write_csv). Rows must
    /// list nodes `0..n` in order.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header: Vec<String> = rd
            .headers()
            .map_err(|e| Error::Malformed {
                line: 1,
                msg: e.to_string(),
            })?
            .iter()
            .map(str::to_owned)
            .collect();
        if header.join(",") != MEASURE_CSV_HEADER {
            return Err(Error::Malformed {
                line: 1,
                msg: format!("expected header `{MEASURE_CSV_HEADER}`"),
            });
        }
        let mut t = Self {
            n: 0,
            degree: Vec::new(),
            avg_nn_degree: Vec::new(),
            degree_anomaly: Vec::new(),
            clustering: Vec::new(),
            clustering_simplified: Vec::new(),
            closeness: Some(Vec::new()),
            betweenness: Some(Vec::new()),
        };
        let (mut has_close, mut has_betw) = (true, true);
        for (k, rec) in rd.records().enumerate() {
            let line = k as u64 + 2;
            let rec = rec.map_err(|e| Error::Malformed {
                line,
                msg: e.to_string(),
            })?;
            let bad = |msg: String| Error::Malformed { line, msg };
            let opt = |c: usize| -> Result<Option<f64>> {
                let v = &rec[c];
                if v.is_empty() {
                    return Ok(None);
                }
                v.parse()
                    .map(Some)
                    .map_err(|_| bad(format!("bad value {v:?} in column {}", header[c])))
            };
            let node: usize = rec[0].parse().map_err(|_| bad(format!("bad node {:?}", &rec[0])))?;
            if node != t.n {
                return Err(bad(format!("expected node {}, found {node}", t.n)));
            }
            t.degree
                .push(rec[1].parse().map_err(|_| bad(format!("bad degree {:?}", &rec[1])))?);
            t.avg_nn_degree.push(opt(2)?);
            t.degree_anomaly.push(opt(3)?);
            t.clustering.push(opt(4)?);
            t.clustering_simplified.push(opt(5)?);
            for (c, present, col) in [
                (6, &mut has_close, &mut t.closeness),
                (7, &mut has_betw, &mut t.betweenness),
            ] {
                match opt(c)? {
                    Some(v) if *present => col.as_mut().expect("present").push(v),
                    None if *present && k == 0 => *present = false,
                    None if !*present => {}
                    _ => return Err(bad(format!("column {} is only partly filled", header[c]))),
                }
            }
            t.n += 1;
        }
        if !has_close {
            t.closeness = None;
        }
        if !has_betw {
            t.betweenness = None;
        }
        Ok(t)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{MEASURE_CSV_HEADER}")?;
        for i in 0..self.n {
            writeln!(
                w,
                "{i},{},{},{},{},{},{},{}",
                self.degree[i],
                cell(self.avg_nn_degree[i]),
                cell(self.degree_anomaly[i]),
                cell(self.clustering[i]),
                cell(self.clustering_simplified[i]),
                cell(self.closeness.as_ref().map(|c| c[i])),
                cell(self.betweenness.as_ref().map(|b| b[i])),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    Degree,
    AvgNnDegree,
    DegreeAnomaly,
    Clustering,
    ClusteringSimplified,
    Closeness,
    Betweenness,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Degree => "degree",
            Measure::AvgNnDegree => "avg_nn_degree",
            Measure::DegreeAnomaly => "degree_anomaly",
            Measure::Clustering => "clustering",
            Measure::ClusteringSimplified => "clustering_simplified",
            Measure::Closeness => "closeness",
            Measure::Betweenness => "betweenness",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Measure::Degree,
            Measure::AvgNnDegree,
            Measure::DegreeAnomaly,
            Measure::Clustering,
            Measure::ClusteringSimplified,
            Measure::Closeness,
            Measure::Betweenness,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

fn values_of(a: &AdjacencyMatrix, which: Measure) -> Result<Vec<Option<f64>>> {
    Ok(match which {
        Measure::Degree => degree(a).into_iter().map(|d| Some(d as f64)).collect(),
        Measure::AvgNnDegree => avg_nn_degree(a),
        Measure::DegreeAnomaly => degree_anomaly(a),
        Measure::Clustering => clustering(a),
        Measure::ClusteringSimplified => clustering_simplified(a),
        Measure::Closeness => closeness(a)?.into_iter().map(Some).collect(),
        Measure::Betweenness => betweenness(a)?.into_iter().map(Some).collect(),
    })
}

/// Mean of `which` over the defined entries in `region`, one value per
/// network in `prefixes`.
pub fn measure_series(prefixes: &[AdjacencyMatrix], which: Measure, region: &[usize]) -> Result<Vec<f64>> {
    if region.is_empty() {
        return Err(Error::Domain("empty region".into()));
    }
    prefixes
        .iter()
        .map(|a| {
            if let Some(&bad) = region.iter().find(|&&i| i >= a.n()) {
                return Err(Error::Domain(format!(
                    "region node {bad} out of range for {} nodes",
                    a.n()
                )));
            }
            let v = values_of(a, which)?;
            let defined: Vec<f64> = region.iter().filter_map(|&i| v[i]).collect();
            if defined.is_empty() {
                return Err(Error::Domain(format!(
                    "{} undefined on the whole region at t_index {}",
                    which.name(),
                    a.t_index_max()
                )));
            }
            Ok(defined.iter().sum::<f64>() / defined.len() as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> AdjacencyMatrix {
        AdjacencyMatrix::from_edges(n, edges, 1.0, 0, 0.0).unwrap()
    }

    fn complete(n: usize) -> AdjacencyMatrix {
        let e: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        graph(n, &e)
    }

    fn star(leaves: usize) -> AdjacencyMatrix {
        let e: Vec<_> = (1..=leaves).map(|j| (0, j)).collect();
        graph(leaves + 1, &e)
    }

    #[test]
    fn csv_round_trip() {
        let a = graph(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        for opts in [
            MeasureOptions::default(),
            MeasureOptions {
                closeness: false,
                betweenness: BetweennessMode::Exact,
            },
        ] {
            let t = NodeMeasureTable::compute(&a, &opts).unwrap();
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            assert_eq!(NodeMeasureTable::read_csv(buf.as_slice()).unwrap(), t);
        }
        assert!(NodeMeasureTable::read_csv("node,degree\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn edgeless() {
        let a = graph(4, &[]);
        assert_eq!(degree(&a), vec![0; 4]);
        assert_eq!(avg_nn_degree(&a), vec![None; 4]);
        assert_eq!(clustering(&a), vec![None; 4]);
        assert_eq!(clustering_simplified(&a), vec![None; 4]);
    }

    #[test]
    fn complete_graph() {
        let a = complete(6);
        assert_eq!(degree(&a), vec![5; 6]);
        assert_eq!(avg_nn_degree(&a), vec![Some(5.0); 6]);
        assert_eq!(clustering(&a), vec![Some(1.0); 6]);
        for c in closeness(&a).unwrap() {
            assert!((c - 6.0 / 5.0).abs() < 1e-15);
        }
        assert_eq!(betweenness(&a).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn star_graph() {
        let a = star(5);
        let nn = avg_nn_degree(&a);
        assert_eq!(nn[0], Some(1.0));
        assert_eq!(nn[3], Some(5.0));
        assert_eq!(degree_anomaly(&a)[0], Some(4.0));
        let b = betweenness(&a).unwrap();
        assert_eq!(b[0], 10.0);
        assert!(b[1..].iter().all(|&x| x == 0.0));
        assert_eq!(clustering(&a), vec![Some(0.0), None, None, None, None, None]);
    }

    #[test]
    fn path_graph() {
        let a = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(closeness(&a).unwrap(), vec![1.0, 1.5, 1.0]);
        assert_eq!(betweenness(&a).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn triangle_plus_tail() {
        let a = graph(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        assert_eq!(triangles(&a), vec![1, 1, 1, 0]);
        let c = clustering(&a);
        assert_eq!(c[0], Some(1.0));
        assert!((c[2].unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c[3], None);
        let s = clustering_simplified(&a);
        assert!((s[2].unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(s[3], Some(0.0));
    }

    #[test]
    fn disconnected_centralities_fail() {
        let a = graph(4, &[(0, 1), (2, 3)]);
        assert!(matches!(closeness(&a), Err(Error::Disconnected { components: 2 })));
        assert!(matches!(betweenness(&a), Err(Error::Disconnected { components: 2 })));
    }

    #[test]
    fn sampled_betweenness() {
        let a = star(6);
        assert_eq!(betweenness_sampled(&a, 7, 3).unwrap(), betweenness(&a).unwrap());
        for seed in 0..10 {
            let b = betweenness_sampled(&a, 2, seed).unwrap();
            assert!(b[1..].iter().all(|&x| b[0] > x));
        }
        assert!(betweenness_sampled(&a, 8, 0).is_err());
    }

    #[test]
    fn csv_has_empty_cells() {
        let a = graph(3, &[(0, 1)]);
        let t = NodeMeasureTable::compute(&a, &MeasureOptions::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], MEASURE_CSV_HEADER);
        assert_eq!(lines[1], "0,1,1,0,,0,,");
        assert_eq!(lines[3], "2,0,,,,,,");
    }

    #[test]
    fn series_over_region() {
        let p = [graph(3, &[(0, 1)]), graph(3, &[(0, 1), (1, 2)])];
        assert_eq!(measure_series(&p, Measure::Degree, &[0, 1]).unwrap(), vec![1.0, 1.5]);
        assert!(measure_series(&p, Measure::Degree, &[]).is_err());
        assert!(measure_series(&p, Measure::Clustering, &[2]).is_err());
    }
}
