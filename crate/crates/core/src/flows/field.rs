//! Regular grids and scalar fields sampled on them.

use std::io::Write;

use crate::error::{Error, Result};

/// Regular grid with the first axis varying fastest in the flat node index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
}

impl GridSpec {
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Self {
        assert!(
            shape.len() == origin.len() && shape.len() == spacing.len(),
            "grid dimensions disagree"
        );
        Self { shape, origin, spacing }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis indices of flat node `i`.
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&s| {
                let k = i % s;
                i /= s;
                k
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).rev().fold(0, |acc, (&k, &s)| acc * s + k)
    }

    /// Distance in the flat index between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.shape[..axis].iter().product()
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .into_iter()
            .enumerate()
            .map(|(a, k)| self.origin[a] + k as f64 * self.spacing[a])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Shape(format!(
                "grid has {} nodes but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Separable Gaussian filter with standard deviation `sigma` in physical
    /// units, truncated at three standard deviations. Weights are renormalised
    /// near the boundary over the nodes that exist.
    pub fn gaussian_smoothed(&self, sigma: f64) -> Result<ScalarField> {
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!("smoothing width must be positive, got {sigma}")));
        }
        let mut cur = self.values.clone();
        let mut next = vec![0.0; cur.len()];
        for axis in 0..self.grid.ndim() {
            let h = self.grid.spacing[axis];
            let reach = (3.0 * sigma / h + 1e-9).floor() as usize;
            let kernel: Vec<f64> = (0..=reach)
                .map(|k| {
                    let r = k as f64 * h / sigma;
                    (-0.5 * r * r).exp()
                })
                .collect();
            let n = self.grid.shape[axis];
            let stride = self.grid.stride(axis);
            for (i, out) in next.iter_mut().enumerate() {
                let k = (i / stride) % n;
                let lo = k.saturating_sub(reach);
                let hi = (k + reach).min(n - 1);
                let (mut acc, mut wsum) = (0.0, 0.0);
                for m in lo..=hi {
                    let w = kernel[m.abs_diff(k)];
                    acc += w * cur[i - k * stride + m * stride];
                    wsum += w;
                }
                *out = acc / wsum;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        ScalarField::new(self.grid.clone(), cur)
    }

    /// Rows `i0,...,y0,...,value` with one index and one coordinate column per
    /// axis.
    pub fn write_csv<W: Write>(
        &self,
        index_names: &[&str],
        coord_names: &[&str],
        value_name: &str,
        mut w: W,
    ) -> std::io::Result<()> {
        let header: Vec<&str> = index_names
            .iter()
            .chain(coord_names)
            .copied()
            .chain(std::iter::once(value_name))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let idx = self.grid.multi_index(i);
            let x = self.grid.coords(i);
            for k in &idx {
                write!(w, "{k},")?;
            }
            for c in &x {
                write!(w, "{c},")?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}
