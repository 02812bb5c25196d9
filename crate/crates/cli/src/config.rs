use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    Map1d,
    DoubleGyre,
    External,
}

impl FromStr for FlowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "map1d" => Ok(FlowKind::Map1d),
            "double-gyre" => Ok(FlowKind::DoubleGyre),
            "external" => Ok(FlowKind::External),
            _ => Err(format!("unknown flow {s:?}; expected map1d, double-gyre or external")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetweennessKind {
    Off,
    Exact,
    Sampled,
}

impl FromStr for BetweennessKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" => Ok(BetweennessKind::Off),
            "exact" => Ok(BetweennessKind::Exact),
            "sampled" => Ok(BetweennessKind::Sampled),
            _ => Err(format!(
                "unknown betweenness mode {s:?}; expected off, exact or sampled"
            )),
        }
    }
}

/// Grid shape written `NYxNZ` (or a single count for 1D grids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridShape(pub Vec<usize>);

impl FromStr for GridShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let dims: Result<Vec<usize>, _> = s.split('x').map(|p| p.trim().parse::<usize>()).collect();
        match dims {
            Ok(d) if !d.is_empty() && d.iter().all(|&v| v >= 2) => Ok(GridShape(d)),
            _ => Err(format!(
                "bad grid shape {s:?}; expected e.g. 500x251 with every extent >= 2"
            )),
        }
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

impl Serialize for GridShape {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GridShape {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Every parameter of a run. Defaults reproduce the double gyre experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub flow: FlowKind,
    /// Trajectories of the 1D map.
    pub n: usize,
    /// Iterations of the 1D map.
    pub steps: usize,
    pub grid: GridShape,
    pub t_final: f64,
    pub dt: f64,
    pub dt_out: f64,
    /// Proximity radius; defaults to 0.01 for map1d and 0.03 otherwise.
    pub epsilon: Option<f64>,
    pub closeness: bool,
    pub betweenness: BetweennessKind,
    pub pivots: usize,
    pub eps_dm: f64,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    /// External ensemble (`.csv` or binary).
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub require_connected: bool,
    pub ftle: bool,
    pub ensemble_csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            flow: FlowKind::DoubleGyre,
            n: 1000,
            steps: 100,
            grid: GridShape(vec![500, 251]),
            t_final: 20.0,
            dt: 0.01,
            dt_out: 0.1,
            epsilon: None,
            closeness: false,
            betweenness: BetweennessKind::Off,
            pivots: 1000,
            eps_dm: 0.01,
            m: 7,
            k: 7,
            seed: 0,
            input: None,
            out: PathBuf::from("out"),
            require_connected: false,
            ftle: true,
            ensemble_csv: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("bad value {value:?} for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("bad boolean {value:?} for `{key}`"))),
    }
}

impl RunConfig {
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(match self.flow {
            FlowKind::Map1d => 0.01,
            _ => 0.03,
        })
    }

    /// Set one parameter from its textual form. Keys use underscores or
    /// dashes interchangeably.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "flow" => self.flow = value.parse().map_err(CliError::Config)?,
            "n" => self.n = parse(k, value)?,
            "steps" => self.steps = parse(k, value)?,
            "grid" => self.grid = value.parse().map_err(CliError::Config)?,
            "t_final" | "T" => self.t_final = parse(k, value)?,
            "dt" => self.dt = parse(k, value)?,
            "dt_out" => self.dt_out = parse(k, value)?,
            "epsilon" => self.epsilon = Some(parse(k, value)?),
            "closeness" => self.closeness = parse_bool(k, value)?,
            "betweenness" => self.betweenness = value.parse().map_err(CliError::Config)?,
            "pivots" => self.pivots = parse(k, value)?,
            "eps_dm" => self.eps_dm = parse(k, value)?,
            "m" => self.m = parse(k, value)?,
            "k" => self.k = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "input" => self.input = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "require_connected" => self.require_connected = parse_bool(k, value)?,
            "ftle" => self.ftle = parse_bool(k, value)?,
            "ensemble_csv" => self.ensemble_csv = parse_bool(k, value)?,
            _ => return Err(CliError::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{}:{}: expected `key = value`", path.display(), no + 1)))?;
            self.set(k, v)
                .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), no + 1)))?;
        }
        Ok(())
    }

    /// Take the configuration recorded in a manifest written by `pipeline`.
    pub fn from_manifest(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let cfg = v
            .get("config")
            .ok_or_else(|| CliError::Input(format!("{}: no `config` object", path.display())))?;
        serde_json::from_value(cfg.clone()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.epsilon() > 0.0) || !self.epsilon().is_finite() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon()));
        }
        if self.flow == FlowKind::External && self.input.is_none() {
            return bad("flow = external needs an input ensemble".into());
        }
        if let Some(p) = &self.input {
            if !p.exists() {
                return Err(CliError::Input(format!(
                    "input ensemble {} does not exist",
                    p.display()
                )));
            }
        }
        if self.flow == FlowKind::DoubleGyre && self.grid.0.len() != 2 {
            return bad(format!("the double gyre needs a 2D grid, got {}", self.grid));
        }
        if !(self.dt > 0.0) || !(self.dt_out > 0.0) || !(self.t_final > 0.0) {
            return bad("t_final, dt and dt_out must be positive".into());
        }
        if self.k == 0 || self.m == 0 || !(self.eps_dm > 0.0) {
            return bad("k, m and eps_dm must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_and_values() {
        let mut c = RunConfig::default();
        c.set("flow", "map1d").unwrap();
        c.set("dt-out", "0.5").unwrap();
        c.set("grid", "200x101").unwrap();
        c.set("require_connected", "yes").unwrap();
        assert_eq!(c.flow, FlowKind::Map1d);
        assert_eq!(c.dt_out, 0.5);
        assert_eq!(c.grid, GridShape(vec![200, 101]));
        assert!(c.require_connected);
        assert_eq!(c.epsilon(), 0.01);
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("k", "x").is_err());
        assert!(c.set("grid", "1x5").is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig {
            epsilon: Some(0.05),
            ..Default::default()
        };
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["grid"], "500x251");
        assert_eq!(serde_json::from_value::<RunConfig>(v).unwrap(), c);
    }
}
