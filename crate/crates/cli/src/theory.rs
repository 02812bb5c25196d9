use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use flownet_core::flows::{
    integrate_variational, singular_history, DoubleGyre, DoubleGyreParams, Flow, FundamentalPath, DOUBLE_GYRE_ANCHORS,
};
use flownet_core::theory::{
    axis_aligned_family, ellipse_union_area_mc, expected_overlap_mc, galaxy_volume_mc, pullback_ellipses,
    vol_galaxy_formula, FlowPropagator, GalaxySpec, DEFAULT_INNER_SAMPLES,
};

use crate::error::CliError;

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Expected relative overlap of rotated ellipses.
    /// Writes overlap.csv: sigma,max_angle,estimate,stderr.
    Overlap(OverlapArgs),
    /// Monte Carlo area of axis-aligned pullback families against the closed form.
    /// Writes volume.csv: sigma,formula,mc,stderr.
    Volume(VolumeArgs),
    /// Singular values, orientation and pullback ellipses along the reference
    /// double gyre trajectories.
    /// Writes pullback.csv: anchor,t,sigma1,sigma2,theta,theta_unwrapped,det,semi_major,semi_minor,angle.
    Pullback(AnchorArgs),
    /// Monte Carlo galaxy sets of the reference trajectories.
    /// Writes galaxy_hits.csv: anchor,y,z and galaxy_volume.csv: anchor,mc,stderr,linearized,linearized_stderr.
    Galaxy(GalaxyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    /// Stretch factors: `a:b` (integers a..=b), `a:b:step`, or a comma list.
    #[arg(long, default_value = "1:10")]
    pub sigma_grid: String,
    /// Maximal rotation angles, e.g. `0,pi/32,pi/16,pi/8`.
    #[arg(long, default_value = "0,pi/32,pi/16,pi/8")]
    pub angles: String,
    /// Outer (configuration) samples per point.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Inner samples per configuration.
    #[arg(long, default_value_t = DEFAULT_INNER_SAMPLES)]
    pub inner: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    #[arg(long, default_value = "1,2,4,10")]
    pub sigma_grid: String,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Ellipses per family.
    #[arg(long, default_value_t = 256)]
    pub family: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AnchorArgs {
    #[arg(long = "T", default_value_t = 5.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Sampling interval of the output.
    #[arg(long, default_value_t = 0.1)]
    pub dt_out: f64,
    #[arg(long, default_value_t = 0.03)]
    pub epsilon: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GalaxyArgs {
    #[command(flatten)]
    pub anchor: AnchorArgs,
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
}

/// Parse `a:b`, `a:b:step` or a comma list of reals.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("bad grid {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let out = match parts.len() {
        1 => s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?,
        2 | 3 => {
            let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let step: f64 = if parts.len() == 3 {
                parts[2].trim().parse().map_err(|_| bad())?
            } else {
                1.0
            };
            if !(step > 0.0) || b < a {
                return Err(bad());
            }
            let count = ((b - a) / step + 1e-9).floor() as usize;
            (0..=count).map(|k| a + k as f64 * step).collect()
        }
        _ => return Err(bad()),
    };
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Parse comma-separated angles such as `0`, `pi`, `pi/32`, `2pi/3`, `0.1`.
pub fn parse_angles(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|tok| {
            let t = tok.trim().to_ascii_lowercase();
            let bad = || CliError::Config(format!("bad angle {tok:?}"));
            let (num, den) = match t.split_once('/') {
                Some((n, d)) => (n.to_string(), d.trim().parse::<f64>().map_err(|_| bad())?),
                None => (t.clone(), 1.0),
            };
            let num = num.trim();
            let value = match num.strip_suffix("pi") {
                Some("") => PI,
                Some(c) => c.trim().trim_end_matches('*').parse::<f64>().map_err(|_| bad())? * PI,
                None => num.parse::<f64>().map_err(|_| bad())?,
            };
            Ok(value / den)
        })
        .collect()
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, std::io::BufWriter<std::fs::File>), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    let f = std::fs::File::create(&p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    Ok((p, std::io::BufWriter::new(f)))
}

fn io(p: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", p.display()))
}

/// Trajectory and fundamental matrix of a double gyre anchor, kept at every
/// `dt_out`.
pub fn anchor_path(x0: [f64; 2], t_final: f64, dt: f64, dt_out: f64) -> Result<FundamentalPath, CliError> {
    let flow = DoubleGyre(DoubleGyreParams::default());
    let (_, path) = integrate_variational(
        |t, x, o| flow.velocity(t, x, o),
        |t, x, o| flow.jacobian(t, x, o),
        &x0,
        0.0,
        t_final,
        dt,
    )?;
    let every = (dt_out / dt).round().max(1.0) as usize;
    let keep: Vec<usize> = (0..path.len())
        .filter(|k| k % every == 0 || k + 1 == path.len())
        .collect();
    Ok(FundamentalPath::new(
        keep.iter().map(|&k| path.times()[k]).collect(),
        keep.iter().map(|&k| path.matrices()[k].clone()).collect(),
    )?)
}

pub fn run(cmd: &TheoryCommand) -> Result<(), CliError> {
    match cmd {
        TheoryCommand::Overlap(a) => {
            let sigmas = parse_grid(&a.sigma_grid)?;
            let angles = parse_angles(&a.angles)?;
            let (p, mut w) = create(&a.common.out, "overlap.csv")?;
            writeln!(w, "sigma,max_angle,estimate,stderr").map_err(io(&p))?;
            for &phi in &angles {
                for &s in &sigmas {
                    let est = expected_overlap_mc(s, phi, a.samples, a.inner, a.common.seed)?;
                    writeln!(w, "{s},{phi},{},{}", est.value, est.std_error).map_err(io(&p))?;
                }
            }
            w.flush().map_err(io(&p))
        }
        TheoryCommand::Volume(a) => {
            let sigmas = parse_grid(&a.sigma_grid)?;
            let (p, mut w) = create(&a.common.out, "volume.csv")?;
            writeln!(w, "sigma,formula,mc,stderr").map_err(io(&p))?;
            for &s in &sigmas {
                let fam = axis_aligned_family(s, a.epsilon, a.family)?;
                let est = ellipse_union_area_mc(&fam, a.samples, a.common.seed)?;
                let f = vol_galaxy_formula(s, a.epsilon)?;
                writeln!(w, "{s},{f},{},{}", est.value, est.std_error).map_err(io(&p))?;
            }
            w.flush().map_err(io(&p))
        }
        TheoryCommand::Pullback(a) => {
            let (p, mut w) = create(&a.common.out, "pullback.csv")?;
            writeln!(
                w,
                "anchor,t,sigma1,sigma2,theta,theta_unwrapped,det,semi_major,semi_minor,angle"
            )
            .map_err(io(&p))?;
            for (k, &x0) in DOUBLE_GYRE_ANCHORS.iter().enumerate() {
                let path = anchor_path(x0, a.t_final, a.dt, a.dt_out)?;
                let h = singular_history(&path)?;
                let ell = pullback_ellipses(&path, a.epsilon)?;
                for (i, e) in ell.iter().enumerate() {
                    writeln!(
                        w,
                        "x{},{},{},{},{},{},{},{},{},{}",
                        k + 1,
                        h.times[i],
                        h.sigma1[i],
                        h.sigma2[i],
                        h.theta[i],
                        h.theta_unwrapped[i],
                        path.matrices()[i].determinant(),
                        e.semi_major,
                        e.semi_minor,
                        e.angle
                    )
                    .map_err(io(&p))?;
                }
            }
            w.flush().map_err(io(&p))
        }
        TheoryCommand::Galaxy(g) => {
            let a = &g.anchor;
            let flow = DoubleGyre(DoubleGyreParams::default());
            let prop = FlowPropagator { flow: &flow, dt: a.dt };
            let (ph, mut hits) = create(&a.common.out, "galaxy_hits.csv")?;
            let (pv, mut vol) = create(&a.common.out, "galaxy_volume.csv")?;
            writeln!(hits, "anchor,y,z").map_err(io(&ph))?;
            writeln!(vol, "anchor,mc,stderr,linearized,linearized_stderr").map_err(io(&pv))?;
            for (k, &x0) in DOUBLE_GYRE_ANCHORS.iter().enumerate() {
                let path = anchor_path(x0, a.t_final, a.dt, a.dt_out)?;
                let spec = GalaxySpec {
                    anchor: x0.to_vec(),
                    epsilon: a.epsilon,
                    times: path.times().to_vec(),
                    sample_box: None,
                };
                let est = galaxy_volume_mc(&prop, &spec, g.samples, a.common.seed, true)?;
                for h in est.hits.chunks_exact(2) {
                    writeln!(hits, "x{},{},{}", k + 1, h[0], h[1]).map_err(io(&ph))?;
                }
                let lin = ellipse_union_area_mc(&pullback_ellipses(&path, a.epsilon)?, g.samples, a.common.seed)?;
                writeln!(
                    vol,
                    "x{},{},{},{},{}",
                    k + 1,
                    est.volume.value,
                    est.volume.std_error,
                    lin.value,
                    lin.std_error
                )
                .map_err(io(&pv))?;
            }
            hits.flush().map_err(io(&ph))?;
            vol.flush().map_err(io(&pv))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1:4").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("1,2,10").unwrap(), vec![1.0, 2.0, 10.0]);
        assert!(parse_grid("3:1").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn angles() {
        let a = parse_angles("0,pi/32,pi,2pi/3,0.25").unwrap();
        assert_eq!(a, vec![0.0, PI / 32.0, PI, 2.0 * PI / 3.0, 0.25]);
        assert!(parse_angles("pie").is_err());
    }
}
