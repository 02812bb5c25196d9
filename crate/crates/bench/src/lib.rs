//! Shared inputs for the benchmarks under `benches/`.

use flownet_core::flows::{generate_double_gyre_ensemble, DoubleGyreSetup};
use flownet_core::measures::MeasureOptions;
use flownet_core::netbuild::build_adjacency;
use flownet_core::{NodeMeasureTable, TrajectoryEnsemble};

/// Proximity radius of the double gyre runs.
pub const EPSILON: f64 = 0.03;

/// Double gyre ensemble on an `ny x nz` grid over `[0, t_final]`.
pub fn double_gyre(ny: usize, nz: usize, t_final: f64) -> TrajectoryEnsemble {
    let setup = DoubleGyreSetup {
        grid: [ny, nz],
        t_final,
        ..Default::default()
    };
    generate_double_gyre_ensemble(&setup).expect("double gyre ensemble").0
}

/// Standardised `(degree, clustering)` cloud of a double gyre network, as
/// interleaved pairs.
pub fn measure_cloud(ny: usize, nz: usize) -> Vec<f64> {
    let ens = double_gyre(ny, nz, 20.0);
    let a = build_adjacency(&ens, EPSILON).expect("network");
    let t = NodeMeasureTable::compute(&a, &MeasureOptions::default()).expect("measures");
    let deg: Vec<f64> = t.degree.iter().map(|&d| d as f64).collect();
    let clu: Vec<f64> = t.clustering.iter().map(|c| c.unwrap_or(0.0)).collect();
    let deg = flownet_core::classify::standardize(&deg).expect("degree spread");
    let clu = flownet_core::classify::standardize(&clu).expect("clustering spread");
    deg.iter().zip(&clu).flat_map(|(&d, &c)| [d, c]).collect()
}
