use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use flownet_core::classify::{classify_pipeline, DiffusionParams, EmbeddingCloud};
use flownet_core::ensemble::{load_binary, load_csv, save_binary, save_csv};
use flownet_core::flows::{
    ftle_field_fd, generate_double_gyre_ensemble, generate_map_ensemble, DoubleGyreParams, DoubleGyreSetup, GridSpec,
    ScalarField, MAP_MIXING_REGION,
};
use flownet_core::measures::{measure_series, BetweennessMode, Measure, MeasureOptions};
use flownet_core::netbuild::{build_adjacency, build_adjacency_prefixes};
use flownet_core::{AdjacencyMatrix, NodeMeasureTable, TrajectoryEnsemble};
use serde::Serialize;

use crate::config::{BetweennessKind, FlowKind, RunConfig};
use crate::error::CliError;

pub const ENSEMBLE_FILE: &str = "ensemble.fnet";
pub const ENSEMBLE_CSV_FILE: &str = "ensemble.csv";
pub const NETWORK_FILE: &str = "network.csv";
pub const MEASURES_FILE: &str = "measures.csv";
pub const FTLE_FILE: &str = "ftle.csv";
pub const FTLE_SMOOTHED_FILE: &str = "ftle_smoothed.csv";
pub const CLASSES_FILE: &str = "classes.csv";
pub const CLASSES_META_FILE: &str = "classes.json";
pub const SERIES_FILE: &str = "series.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: &'static str,
    pub seconds: f64,
    pub outputs: Vec<String>,
}

/// Times stages and collects their output files.
#[derive(Debug, Default)]
pub struct Recorder {
    pub stages: Vec<StageRecord>,
}

impl Recorder {
    pub fn run<T>(
        &mut self,
        stage: &'static str,
        f: impl FnOnce() -> Result<(T, Vec<PathBuf>), CliError>,
    ) -> Result<T, CliError> {
        log::info!("stage {stage}");
        let start = Instant::now();
        let (value, outputs) = f()?;
        let seconds = start.elapsed().as_secs_f64();
        log::info!("stage {stage} finished in {seconds:.2} s");
        self.stages.push(StageRecord {
            stage,
            seconds,
            outputs: outputs
                .iter()
                .map(|p| {
                    p.file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default()
                })
                .collect(),
        });
        Ok(value)
    }
}

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Input(format!("{}: {e}", cfg.out.display())))?;
    Ok(cfg.out.join(name))
}

fn require(path: &Path, producer: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "{} not found; run `flownet {producer}` with the same --out first",
            path.display()
        )))
    }
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn double_gyre_setup(cfg: &RunConfig) -> DoubleGyreSetup {
    DoubleGyreSetup {
        grid: [cfg.grid.0[0], cfg.grid.0[1]],
        t_final: cfg.t_final,
        dt: cfg.dt,
        dt_out: cfg.dt_out,
        params: DoubleGyreParams::default(),
    }
}

pub fn generate(cfg: &RunConfig) -> Result<(TrajectoryEnsemble, Vec<PathBuf>), CliError> {
    let ens = match cfg.flow {
        FlowKind::Map1d => generate_map_ensemble(cfg.n, cfg.steps)?,
        FlowKind::DoubleGyre => generate_double_gyre_ensemble(&double_gyre_setup(cfg))?.0,
        FlowKind::External => {
            return Err(CliError::Config(
                "external ensembles are read with --input, not generated".into(),
            ))
        }
    };
    let path = out_path(cfg, ENSEMBLE_FILE)?;
    save_binary(&ens, &path)?;
    let mut outputs = vec![path];
    if cfg.ensemble_csv {
        let csv = out_path(cfg, ENSEMBLE_CSV_FILE)?;
        save_csv(&ens, &csv)?;
        outputs.push(csv);
    }
    Ok((ens, outputs))
}

/// The external input if configured, otherwise the generated ensemble.
pub fn load_ensemble(cfg: &RunConfig) -> Result<TrajectoryEnsemble, CliError> {
    let path = match &cfg.input {
        Some(p) => p.clone(),
        None => {
            let p = cfg.out.join(ENSEMBLE_FILE);
            require(&p, "generate")?;
            p
        }
    };
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    Ok(if is_csv { load_csv(&path)? } else { load_binary(&path)? })
}

pub fn network(cfg: &RunConfig, ens: &TrajectoryEnsemble) -> Result<(AdjacencyMatrix, Vec<PathBuf>), CliError> {
    let a = build_adjacency(ens, cfg.epsilon())?;
    log::info!(
        "network: {} nodes, {} edges, mean degree {:.2}",
        a.n(),
        a.num_edges(),
        a.mean_degree()
    );
    if cfg.require_connected {
        a.require_connected()?;
    }
    let path = out_path(cfg, NETWORK_FILE)?;
    a.save_csv(&path)?;
    Ok((a, vec![path]))
}

pub fn load_network(cfg: &RunConfig) -> Result<AdjacencyMatrix, CliError> {
    let p = cfg.out.join(NETWORK_FILE);
    require(&p, "network")?;
    Ok(AdjacencyMatrix::load_csv(&p)?)
}

pub fn measure_options(cfg: &RunConfig) -> MeasureOptions {
    MeasureOptions {
        closeness: cfg.closeness,
        betweenness: match cfg.betweenness {
            BetweennessKind::Off => BetweennessMode::Skip,
            BetweennessKind::Exact => BetweennessMode::Exact,
            BetweennessKind::Sampled => BetweennessMode::Sampled {
                pivots: cfg.pivots,
                seed: cfg.seed,
            },
        },
    }
}

pub fn measures(cfg: &RunConfig, a: &AdjacencyMatrix) -> Result<(NodeMeasureTable, Vec<PathBuf>), CliError> {
    let t = NodeMeasureTable::compute(a, &measure_options(cfg))?;
    let path = out_path(cfg, MEASURES_FILE)?;
    t.save_csv(&path)?;
    Ok((t, vec![path]))
}

pub fn load_measures(cfg: &RunConfig) -> Result<NodeMeasureTable, CliError> {
    let p = cfg.out.join(MEASURES_FILE);
    require(&p, "measures")?;
    Ok(NodeMeasureTable::load_csv(&p)?)
}

/// Regular grid of the initial slice: exact for the double gyre, otherwise
/// read off the positions using the configured shape.
pub fn grid_of(cfg: &RunConfig, ens: &TrajectoryEnsemble) -> Result<GridSpec, CliError> {
    if cfg.flow == FlowKind::DoubleGyre && cfg.input.is_none() {
        return Ok(double_gyre_setup(cfg).grid_spec());
    }
    let shape = if cfg.flow == FlowKind::Map1d && cfg.input.is_none() {
        vec![cfg.n]
    } else {
        cfg.grid.0.clone()
    };
    let d = shape.len();
    let count: usize = shape.iter().product();
    if d != ens.dim() || count != ens.n_traj() {
        return Err(CliError::Config(format!(
            "grid {} does not match {} trajectories in {} dimensions",
            crate::config::GridShape(shape),
            ens.n_traj(),
            ens.dim()
        )));
    }
    let origin = ens.point(0, 0).to_vec();
    let mut stride = 1;
    let mut spacing = Vec::with_capacity(d);
    for (a, &len) in shape.iter().enumerate() {
        spacing.push(ens.position(0, stride, a) - origin[a]);
        stride *= len;
    }
    let grid = GridSpec::new(shape, origin, spacing);
    let scale = grid.spacing().iter().fold(0.0f64, |m, s| m.max(s.abs()));
    for i in 0..grid.len() {
        let c = grid.coords(i);
        if c.iter()
            .enumerate()
            .any(|(a, x)| (x - ens.position(0, i, a)).abs() > 1e-6 * scale)
        {
            return Err(CliError::Input(format!(
                "initial positions are not a regular {} grid (first mismatch at trajectory {i})",
                crate::config::GridShape(grid.shape().to_vec())
            )));
        }
    }
    Ok(grid)
}

fn field_names(d: usize) -> (Vec<&'static str>, Vec<&'static str>) {
    match d {
        1 => (vec!["ix"], vec!["x"]),
        2 => (vec!["iy", "iz"], vec!["y", "z"]),
        _ => (
            vec!["i0", "i1", "i2"][..d.min(3)].to_vec(),
            vec!["x0", "x1", "x2"][..d.min(3)].to_vec(),
        ),
    }
}

pub fn ftle(cfg: &RunConfig, ens: &TrajectoryEnsemble) -> Result<((ScalarField, ScalarField), Vec<PathBuf>), CliError> {
    let grid = grid_of(cfg, ens)?;
    let raw = ftle_field_fd(ens, &grid, 0, ens.n_times() - 1)?;
    let smooth = raw.gaussian_smoothed(cfg.epsilon())?;
    let (idx, coord) = field_names(grid.ndim());
    let mut outputs = Vec::new();
    for (field, name) in [(&raw, FTLE_FILE), (&smooth, FTLE_SMOOTHED_FILE)] {
        let p = out_path(cfg, name)?;
        write_with(&p, |w| field.write_csv(&idx, &coord, "ftle", w))?;
        outputs.push(p);
    }
    Ok(((raw, smooth), outputs))
}

pub fn diffusion_params(cfg: &RunConfig) -> DiffusionParams {
    DiffusionParams {
        seed: cfg.seed,
        ..DiffusionParams::new(cfg.eps_dm, cfg.m)
    }
}

pub fn classify(cfg: &RunConfig, t: &NodeMeasureTable) -> Result<(EmbeddingCloud, Vec<PathBuf>), CliError> {
    let cloud = classify_pipeline(t, &diffusion_params(cfg), cfg.k, cfg.seed)?;
    let csv = out_path(cfg, CLASSES_FILE)?;
    cloud.save_csv(&csv)?;
    let meta = out_path(cfg, CLASSES_META_FILE)?;
    cloud.save_metadata(&meta)?;
    Ok((cloud, vec![csv, meta]))
}

/// Mean degree and clustering of the mixing and static regions of the 1D map
/// after every step.
pub fn series(cfg: &RunConfig, ens: &TrajectoryEnsemble) -> Result<((), Vec<PathBuf>), CliError> {
    let steps: Vec<usize> = (0..ens.n_times()).collect();
    let prefixes = build_adjacency_prefixes(ens, cfg.epsilon(), &steps)?;
    let (lo, hi) = MAP_MIXING_REGION;
    let (mixing, static_): (Vec<usize>, Vec<usize>) = (0..ens.n_traj()).partition(|&i| {
        let x = ens.position(0, i, 0);
        (lo..=hi).contains(&x)
    });
    let p = out_path(cfg, SERIES_FILE)?;
    let mut rows = Vec::new();
    for (name, region) in [("mixing", &mixing), ("static", &static_)] {
        if region.is_empty() {
            continue;
        }
        let deg = measure_series(&prefixes, Measure::Degree, region)?;
        let clu = measure_series(&prefixes, Measure::Clustering, region)?;
        for (s, (d, c)) in deg.iter().zip(&clu).enumerate() {
            rows.push((s, name, *d, *c));
        }
    }
    rows.sort_by_key(|r| (r.0, r.1));
    write_with(&p, |w| {
        writeln!(w, "step,region,mean_degree,mean_clustering")?;
        for (s, name, d, c) in &rows {
            writeln!(w, "{s},{name},{d},{c}")?;
        }
        Ok(())
    })?;
    Ok(((), vec![p]))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    epsilon: f64,
    seed: u64,
    threads: usize,
    stages: &'a [StageRecord],
    total_seconds: f64,
}

pub fn pipeline(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let mut rec = Recorder::default();
    let ens = if cfg.flow == FlowKind::External {
        rec.run("load", || Ok((load_ensemble(cfg)?, vec![])))?
    } else {
        rec.run("generate", || generate(cfg))?
    };
    let a = rec.run("network", || network(cfg, &ens))?;
    let table = rec.run("measures", || measures(cfg, &a))?;
    drop(a);
    if cfg.flow == FlowKind::Map1d {
        rec.run("series", || series(cfg, &ens))?;
    } else if cfg.ftle {
        rec.run("ftle", || ftle(cfg, &ens))?;
    }
    rec.run("classify", || classify(cfg, &table))?;
    write_manifest(cfg, "pipeline", &rec, start.elapsed().as_secs_f64())
}

pub fn write_manifest(cfg: &RunConfig, command: &'static str, rec: &Recorder, total: f64) -> Result<(), CliError> {
    let m = Manifest {
        tool: "flownet",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        epsilon: cfg.epsilon(),
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        stages: &rec.stages,
        total_seconds: total,
    };
    let p = out_path(cfg, MANIFEST_FILE)?;
    let json = serde_json::to_string_pretty(&m).expect("manifest serialises");
    std::fs::write(&p, json + "\n").map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
}
