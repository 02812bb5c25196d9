//! Trajectory ensembles: N trajectories sampled at T+1 common time stamps.
//!
//! Positions are stored time-major, `(time, trajectory, dimension)`, so that a
//! whole time slice is one contiguous run of `n_traj * dim` reals.
//!
//! Two on-disk formats are supported:
//!
//! * CSV with header `traj_id,t,x0[,x1,...]`, one row per `(traj_id, t)`.
//! * A little-endian binary format: magic `FNET`, a version byte, `n_traj`,
//!   `n_times`, `dim` as `u64`, then the time stamps and the positions as
//!   `f64` in `(time, trajectory, dimension)` order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FNET";
pub const FORMAT_VERSION: u8 = 1;
const HEADER_LEN: u64 = 4 + 1 + 3 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    n_traj: usize,
    dim: usize,
    times: Vec<f64>,
    positions: Vec<f64>,
}

impl TrajectoryEnsemble {
    /// Build an ensemble from time-major positions.
    pub fn new(n_traj: usize, dim: usize, times: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        if n_traj == 0 {
            return Err(Error::InvalidEnsemble("no trajectories".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidEnsemble("spatial dimension is zero".into()));
        }
        if times.len() < 2 {
            return Err(Error::InvalidEnsemble(format!(
                "need at least two time slices, got {}",
                times.len()
            )));
        }
        if let Some(k) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidEnsemble(format!("time stamp {k} is not finite")));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidEnsemble(format!(
                "time stamps not strictly increasing at index {}",
                k + 1
            )));
        }
        let expected = times.len() * n_traj * dim;
        if positions.len() != expected {
            return Err(Error::InvalidEnsemble(format!(
                "expected {expected} coordinates, got {}",
                positions.len()
            )));
        }
        let bad = positions.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(Error::InvalidEnsemble(format!("{bad} non-finite coordinates")));
        }
        Ok(Self {
            n_traj,
            dim,
            times,
            positions,
        })
    }

    pub fn n_traj(&self) -> usize {
        self.n_traj
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// All positions at time index `t`, trajectory-major.
    pub fn slice(&self, t: usize) -> &[f64] {
        let len = self.n_traj * self.dim;
        &self.positions[t * len..(t + 1) * len]
    }

    pub fn point(&self, t: usize, traj: usize) -> &[f64] {
        let s = self.slice(t);
        &s[traj * self.dim..(traj + 1) * self.dim]
    }

    pub fn position(&self, t: usize, traj: usize, k: usize) -> f64 {
        self.point(t, traj)[k]
    }

    /// Per-dimension `(min, max)` of the slice at time index `t`.
    pub fn bounding_box_at(&self, t: usize) -> Vec<(f64, f64)> {
        bounding_box(self.slice(t), self.dim)
    }

    /// Keep only the time slices `0..=t_index`.
    pub fn truncated(&self, t_index: usize) -> Result<Self> {
        if t_index == 0 || t_index >= self.n_times() {
            return Err(Error::Domain(format!(
                "cannot truncate {} slices at index {t_index}",
                self.n_times()
            )));
        }
        let len = self.n_traj * self.dim * (t_index + 1);
        Self::new(
            self.n_traj,
            self.dim,
            self.times[..=t_index].to_vec(),
            self.positions[..len].to_vec(),
        )
    }
}

fn bounding_box(coords: &[f64], dim: usize) -> Vec<(f64, f64)> {
    let mut bb = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for p in coords.chunks_exact(dim) {
        for (b, &v) in bb.iter_mut().zip(p) {
            if v.is_finite() {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
    }
    bb
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub missing_count: usize,
    pub nonfinite_count: usize,
    pub duplicate_id_count: usize,
    pub bounding_box: Vec<(f64, f64)>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.missing_count == 0 && self.nonfinite_count == 0 && self.duplicate_id_count == 0
    }
}

/// Report on a constructed ensemble. The bounding box spans all slices.
pub fn validate(ensemble: &TrajectoryEnsemble) -> ValidationReport {
    ValidationReport {
        missing_count: 0,
        nonfinite_count: ensemble.positions.iter().filter(|v| !v.is_finite()).count(),
        duplicate_id_count: 0,
        bounding_box: bounding_box(&ensemble.positions, ensemble.dim),
    }
}

/// One parsed CSV row, before any grid checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub line: u64,
    pub traj_id: String,
    pub t: f64,
    pub coords: Vec<f64>,
}

/// The rows of a trajectory CSV exactly as read.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub dim: usize,
    pub rows: Vec<RawRow>,
}

struct GridLayout {
    ids: Vec<String>,
    id_index: HashMap<String, usize>,
    times: Vec<f64>,
}

impl RawTable {
    fn layout(&self) -> GridLayout {
        let mut ids = Vec::new();
        let mut id_index = HashMap::new();
        for r in &self.rows {
            if !id_index.contains_key(&r.traj_id) {
                id_index.insert(r.traj_id.clone(), ids.len());
                ids.push(r.traj_id.clone());
            }
        }
        let mut times: Vec<f64> = self.rows.iter().map(|r| r.t).filter(|t| t.is_finite()).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        GridLayout { ids, id_index, times }
    }

    /// Counts of problems that would prevent building an ensemble.
    pub fn validate(&self) -> ValidationReport {
        let layout = self.layout();
        let mut seen = vec![false; layout.ids.len() * layout.times.len()];
        let mut duplicates = 0;
        let mut nonfinite = 0;
        let mut coords = Vec::with_capacity(self.rows.len() * self.dim);
        for r in &self.rows {
            nonfinite += r.coords.iter().filter(|v| !v.is_finite()).count();
            if !r.t.is_finite() {
                nonfinite += 1;
                continue;
            }
            coords.extend_from_slice(&r.coords);
            let ti = layout.times.binary_search_by(|x| x.total_cmp(&r.t)).unwrap();
            let cell = layout.id_index[&r.traj_id] * layout.times.len() + ti;
            if seen[cell] {
                duplicates += 1;
            }
            seen[cell] = true;
        }
        ValidationReport {
            missing_count: seen.iter().filter(|s| !**s).count(),
            nonfinite_count: nonfinite,
            duplicate_id_count: duplicates,
            bounding_box: bounding_box(&coords, self.dim),
        }
    }

    /// Arrange the rows into an ensemble, ordering trajectories by first
    /// appearance and slices by time.
    pub fn into_ensemble(self) -> Result<TrajectoryEnsemble> {
        let layout = self.layout();
        let n_traj = layout.ids.len();
        let n_times = layout.times.len();
        let dim = self.dim;
        let mut positions = vec![f64::NAN; n_traj * n_times * dim];
        let mut seen = vec![false; n_traj * n_times];
        for r in &self.rows {
            if !r.t.is_finite() || r.coords.iter().any(|v| !v.is_finite()) {
                return Err(Error::Malformed {
                    line: r.line,
                    msg: "non-finite value".into(),
                });
            }
            let ti = layout.times.binary_search_by(|x| x.total_cmp(&r.t)).unwrap();
            let id = layout.id_index[&r.traj_id];
            if seen[ti * n_traj + id] {
                return Err(Error::Malformed {
                    line: r.line,
                    msg: format!("duplicate row for trajectory {:?} at t = {}", r.traj_id, r.t),
                });
            }
            seen[ti * n_traj + id] = true;
            let at = (ti * n_traj + id) * dim;
            positions[at..at + dim].copy_from_slice(&r.coords);
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            let missing = seen.iter().filter(|s| !**s).count();
            return Err(Error::IncompleteGrid(format!(
                "{missing} (traj_id, t) combinations missing, first: trajectory {:?} at t = {}",
                layout.ids[k % n_traj],
                layout.times[k / n_traj]
            )));
        }
        TrajectoryEnsemble::new(n_traj, dim, layout.times, positions)
    }
}

/// Parse a trajectory CSV without assembling the grid.
pub fn read_csv_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_table_from(file)
}

pub fn read_csv_table_from<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Malformed {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 3 || names[0] != "traj_id" || names[1] != "t" {
        return Err(Error::Malformed {
            line: 1,
            msg: format!("expected header traj_id,t,x0[,x1,...], got {}", names.join(",")),
        });
    }
    for (k, name) in names[2..].iter().enumerate() {
        if *name != format!("x{k}") {
            return Err(Error::Malformed {
                line: 1,
                msg: format!("coordinate column {k} is named {name:?}, expected \"x{k}\""),
            });
        }
    }
    let dim = names.len() - 2;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != dim + 2 {
            return Err(Error::Malformed {
                line,
                msg: format!("expected {} fields, found {}", dim + 2, rec.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|_| Error::Malformed {
                line,
                msg: format!("field {} is not a number: {:?}", k + 1, &rec[k]),
            })
        };
        let t = num(1)?;
        let coords = (2..dim + 2).map(num).collect::<Result<Vec<_>>>()?;
        rows.push(RawRow {
            line,
            traj_id: rec[0].to_string(),
            t,
            coords,
        });
    }
    Ok(RawTable { dim, rows })
}

pub fn load_csv(path: &Path) -> Result<TrajectoryEnsemble> {
    read_csv_table(path)?.into_ensemble()
}

/// Write the ensemble as CSV with trajectory ids `0..n_traj`. Reals use the
/// shortest representation that parses back to the same `f64`.
pub fn save_csv(ensemble: &TrajectoryEnsemble, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ensemble, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn write_csv<W: Write>(ensemble: &TrajectoryEnsemble, mut w: W) -> std::io::Result<()> {
    write!(w, "traj_id,t")?;
    for k in 0..ensemble.dim {
        write!(w, ",x{k}")?;
    }
    writeln!(w)?;
    for i in 0..ensemble.n_traj {
        for (ti, t) in ensemble.times.iter().enumerate() {
            write!(w, "{i},{t}")?;
            for v in ensemble.point(ti, i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

pub fn save_binary(ensemble: &TrajectoryEnsemble, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_binary(ensemble, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn write_binary<W: Write>(ensemble: &TrajectoryEnsemble, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    for n in [ensemble.n_traj, ensemble.n_times(), ensemble.dim] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for v in ensemble.times.iter().chain(&ensemble.positions) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn load_binary(path: &Path) -> Result<TrajectoryEnsemble> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    read_binary(BufReader::new(file), len).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Decode the binary format from a reader holding exactly `total_len` bytes.
pub fn read_binary<R: Read>(mut r: R, total_len: u64) -> Result<TrajectoryEnsemble> {
    if total_len < HEADER_LEN {
        return Err(Error::Format(format!(
            "file has {total_len} bytes, shorter than the {HEADER_LEN}-byte header"
        )));
    }
    let mut header = [0u8; HEADER_LEN as usize];
    r.read_exact(&mut header).map_err(|e| Error::io("<binary>", e))?;
    if &header[..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    if header[4] != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", header[4])));
    }
    let field = |k: usize| u64::from_le_bytes(header[5 + 8 * k..13 + 8 * k].try_into().unwrap());
    let (n_traj, n_times, dim) = (field(0), field(1), field(2));
    let count = n_traj
        .checked_mul(n_times)
        .and_then(|v| v.checked_mul(dim))
        .and_then(|v| v.checked_add(n_times))
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    let found = total_len - HEADER_LEN;
    if count != found {
        return Err(Error::LengthMismatch { expected: count, found });
    }
    let mut reals = vec![0f64; (count / 8) as usize];
    let mut buf = vec![0u8; 1 << 16];
    let mut filled = 0;
    while filled < reals.len() {
        let take = (reals.len() - filled).min(buf.len() / 8);
        r.read_exact(&mut buf[..take * 8])
            .map_err(|e| Error::io("<binary>", e))?;
        for (dst, src) in reals[filled..filled + take].iter_mut().zip(buf.chunks_exact(8)) {
            *dst = f64::from_le_bytes(src.try_into().unwrap());
        }
        filled += take;
    }
    let positions = reals.split_off(n_times as usize);
    TrajectoryEnsemble::new(n_traj as usize, dim as usize, reals, positions)
}
