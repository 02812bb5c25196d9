//! `flownet`: build trajectory proximity networks, measure them, compare with
//! FTLE and classify trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod stages;
mod theory;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{BetweennessKind, FlowKind, GridShape, RunConfig};
use error::CliError;
use stages::Recorder;

#[derive(Debug, Parser)]
#[command(name = "flownet", version, about = "Trajectory proximity networks for flow analysis")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a trajectory ensemble (map1d or double gyre).
    Generate(RunArgs),
    /// Build the ε-proximity network of an ensemble.
    Network(RunArgs),
    /// Compute node measures of the network.
    Measures(RunArgs),
    /// Finite-difference FTLE field, raw and smoothed.
    Ftle(RunArgs),
    /// Diffusion-map embedding and k-means classification of the measures.
    Classify(RunArgs),
    /// Run every stage and write a manifest.
    Pipeline(RunArgs),
    /// Theoretical galaxy and overlap estimates.
    #[command(subcommand)]
    Theory(theory::TheoryCommand),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reuse the configuration recorded in a manifest.json.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    /// map1d, double-gyre or external.
    #[arg(long)]
    flow: Option<FlowKind>,
    /// Trajectories of the 1D map.
    #[arg(long)]
    n: Option<usize>,
    /// Iterations of the 1D map.
    #[arg(long)]
    steps: Option<usize>,
    /// Grid shape, e.g. 500x251.
    #[arg(long)]
    grid: Option<GridShape>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Integrator step.
    #[arg(long)]
    dt: Option<f64>,
    /// Output sampling interval.
    #[arg(long)]
    dt_out: Option<f64>,
    /// Proximity radius (default 0.01 for map1d, 0.03 otherwise).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Compute closeness centrality.
    #[arg(long)]
    closeness: bool,
    /// off, exact or sampled.
    #[arg(long)]
    betweenness: Option<BetweennessKind>,
    /// Pivot sources for sampled betweenness.
    #[arg(long)]
    pivots: Option<usize>,
    /// Diffusion-map kernel scale.
    #[arg(long)]
    eps_dm: Option<f64>,
    /// Diffusion coordinates kept.
    #[arg(long)]
    m: Option<usize>,
    /// k-means classes.
    #[arg(long)]
    k: Option<usize>,
    /// Seed for k-means and sampled betweenness.
    #[arg(long)]
    seed: Option<u64>,
    /// External ensemble (`.csv` or binary).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail with a numerical error when the network is disconnected.
    #[arg(long)]
    require_connected: bool,
    /// Skip the FTLE stage of `pipeline`.
    #[arg(long)]
    no_ftle: bool,
    /// Also write the ensemble as CSV.
    #[arg(long)]
    ensemble_csv: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.from_manifest {
            Some(p) => RunConfig::from_manifest(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.config {
            cfg.apply_file(p)?;
        }
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { cfg.$f = v.clone(); } )* };
        }
        over!(
            flow,
            n,
            steps,
            grid,
            t_final,
            dt,
            dt_out,
            betweenness,
            pivots,
            eps_dm,
            m,
            k,
            seed,
            out
        );
        if self.epsilon.is_some() {
            cfg.epsilon = self.epsilon;
        }
        if self.input.is_some() {
            cfg.input = self.input.clone();
            if self.flow.is_none() && cfg.flow != FlowKind::External {
                cfg.flow = FlowKind::External;
            }
        }
        cfg.closeness |= self.closeness;
        cfg.require_connected |= self.require_connected;
        cfg.ensemble_csv |= self.ensemble_csv;
        if self.no_ftle {
            cfg.ftle = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn single<T>(
    cfg: &RunConfig,
    name: &'static str,
    f: impl FnOnce() -> Result<(T, Vec<PathBuf>), CliError>,
) -> Result<(), CliError> {
    let start = Instant::now();
    let mut rec = Recorder::default();
    rec.run(name, f)?;
    for s in &rec.stages {
        for o in &s.outputs {
            log::info!("wrote {}", cfg.out.join(o).display());
        }
    }
    log::debug!("{name} took {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Generate(a) => {
            let cfg = a.resolve()?;
            single(&cfg, "generate", || stages::generate(&cfg))
        }
        Command::Network(a) => {
            let cfg = a.resolve()?;
            let ens = stages::load_ensemble(&cfg)?;
            single(&cfg, "network", || stages::network(&cfg, &ens))
        }
        Command::Measures(a) => {
            let cfg = a.resolve()?;
            let net = stages::load_network(&cfg)?;
            single(&cfg, "measures", || stages::measures(&cfg, &net))
        }
        Command::Ftle(a) => {
            let cfg = a.resolve()?;
            let ens = stages::load_ensemble(&cfg)?;
            single(&cfg, "ftle", || stages::ftle(&cfg, &ens))
        }
        Command::Classify(a) => {
            let cfg = a.resolve()?;
            let t = stages::load_measures(&cfg)?;
            single(&cfg, "classify", || stages::classify(&cfg, &t))
        }
        Command::Pipeline(a) => stages::pipeline(&a.resolve()?),
        Command::Theory(t) => theory::run(t),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flownet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
