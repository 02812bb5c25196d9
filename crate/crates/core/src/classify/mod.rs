//! Classification of trajectories from their (degree, clustering) pairs:
//! standardisation, diffusion-map embedding and k-means.

mod diffusion;
mod kmeans;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub use diffusion::{diffusion_maps, DiffusionEmbedding, DiffusionParams, EigenSolver, DENSE_LIMIT};
pub use kmeans::{kmeans, KMeansResult, KMEANS_MAX_ITER};

use crate::error::{Error, Result};
use crate::measures::NodeMeasureTable;

/// Kernel normalisation used by [`diffusion_maps`]: plain row-stochastic,
/// without density correction.
pub const NORMALIZATION: &str = "row-stochastic, alpha = 0";

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// `values` divided by their population standard deviation.
pub fn standardize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Degenerate("cannot standardise an empty column".into()));
    }
    let sd = population_std(values);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Degenerate(format!("column has standard deviation {sd}")));
    }
    Ok(values.iter().map(|x| x / sd).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCloud {
    pub n: usize,
    /// Network node of each row.
    pub nodes: Vec<usize>,
    /// Nodes left out because a measure is undefined for them.
    pub excluded: Vec<usize>,
    /// `(degree, clustering)` per row.
    pub raw: Vec<[f64; 2]>,
    pub standardized: Vec<[f64; 2]>,
    pub embedding: DiffusionEmbedding,
    pub params: DiffusionParams,
    pub clusters: Option<KMeansResult>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyMetadata {
    pub n: usize,
    pub excluded: usize,
    pub eps_dm: f64,
    pub m: usize,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub cutoff_radius: f64,
    pub normalization: &'static str,
    pub eigenvalues: Vec<f64>,
    pub kernel_components: usize,
    pub bins: Option<usize>,
    pub kmeans_iterations: Option<usize>,
    pub kmeans_converged: Option<bool>,
    pub inertia: Option<f64>,
}

impl EmbeddingCloud {
    /// Standardise the defined (degree, clustering) pairs and embed them.
    pub fn embed(table: &NodeMeasureTable, params: &DiffusionParams) -> Result<Self> {
        let (mut nodes, mut excluded, mut raw) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..table.n {
            match table.clustering[i] {
                Some(c) => {
                    nodes.push(i);
                    raw.push([table.degree[i] as f64, c]);
                }
                None => excluded.push(i),
            }
        }
        if !excluded.is_empty() {
            log::warn!(
                "{} nodes without a clustering coefficient left out of the embedding",
                excluded.len()
            );
        }
        let deg = standardize(&raw.iter().map(|r| r[0]).collect::<Vec<_>>())?;
        let clu = standardize(&raw.iter().map(|r| r[1]).collect::<Vec<_>>())?;
        let standardized: Vec<[f64; 2]> = deg.into_iter().zip(clu).map(|(a, b)| [a, b]).collect();
        let flat: Vec<f64> = standardized.iter().flatten().copied().collect();
        let embedding = diffusion_maps(&flat, 2, params)?;
        Ok(Self {
            n: nodes.len(),
            nodes,
            excluded,
            raw,
            standardized,
            embedding,
            params: *params,
            clusters: None,
            seed: None,
        })
    }

    /// Run k-means on the diffusion coordinates.
    pub fn cluster(&mut self, k: usize, seed: u64) -> Result<&KMeansResult> {
        let res = kmeans(&self.embedding.coords, self.embedding.m, k, seed)?;
        self.seed = Some(seed);
        Ok(self.clusters.insert(res))
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.clusters.as_ref().map(|c| c.labels.as_slice())
    }

    /// Label per network node, `None` for excluded nodes.
    pub fn node_labels(&self, total: usize) -> Option<Vec<Option<u32>>> {
        let labels = self.labels()?;
        let mut out = vec![None; total];
        for (&node, &l) in self.nodes.iter().zip(labels) {
            out[node] = Some(l);
        }
        Some(out)
    }

    pub fn metadata(&self) -> ClassifyMetadata {
        ClassifyMetadata {
            n: self.n,
            excluded: self.excluded.len(),
            eps_dm: self.params.eps_dm,
            m: self.embedding.m,
            k: self.clusters.as_ref().map(|c| c.k),
            seed: self.seed,
            cutoff_radius: self.params.cutoff_radius,
            normalization: NORMALIZATION,
            eigenvalues: self.embedding.eigenvalues.clone(),
            kernel_components: self.embedding.components,
            bins: self.embedding.bins,
            kmeans_iterations: self.clusters.as_ref().map(|c| c.iterations),
            kmeans_converged: self.clusters.as_ref().map(|c| c.converged),
            inertia: self.clusters.as_ref().map(|c| c.inertia),
        }
    }

    /// Rows `node,degree_std,clustering_std,dc1..dcm,label`; the label is
    /// empty before clustering.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = self.embedding.m;
        let dcs: Vec<String> = (1..=m).map(|j| format!("dc{j}")).collect();
        writeln!(w, "node,degree_std,clustering_std,{},label", dcs.join(","))?;
        let labels = self.labels();
        for (r, &node) in self.nodes.iter().enumerate() {
            write!(w, "{node},{},{}", self.standardized[r][0], self.standardized[r][1])?;
            for j in 0..m {
                write!(w, ",{}", self.embedding.coord(r, j))?;
            }
            match labels {
                Some(l) => writeln!(w, ",{}", l[r])?,
                None => writeln!(w, ",")?,
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn save_metadata(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.metadata()).expect("metadata serialises");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Standardise, embed with diffusion maps and cluster into `k` classes.
pub fn classify_pipeline(
    table: &NodeMeasureTable,
    params: &DiffusionParams,
    k: usize,
    seed: u64,
) -> Result<EmbeddingCloud> {
    let mut cloud = EmbeddingCloud::embed(table, params)?;
    cloud.cluster(k, seed)?;
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_hand_values() {
        let out = standardize(&[0.0, 3.0, 6.0]).unwrap();
        let s6 = 6f64.sqrt();
        assert!((out[1] - 3.0 / s6).abs() < 1e-15 && (out[2] - 6.0 / s6).abs() < 1e-15);
        assert!((out[1] - 1.2247).abs() < 1e-4);
        assert!(standardize(&[2.0, 2.0]).is_err());
    }

    #[test]
    fn standardize_unit_std_and_scale_invariant() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() + 4.0).collect();
        let a = standardize(&v).unwrap();
        assert!((population_std(&a) - 1.0).abs() < 1e-10);
        let b = standardize(&v.iter().map(|x| 10.0 * x).collect::<Vec<_>>()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
