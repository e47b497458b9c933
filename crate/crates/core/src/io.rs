//! Run configuration parsing and the plain-text output formats.
//!
//! Energy series are CSV with a `time,energy` header. Fields use a grid
//! format with a four-line header
//!
//! ```text
//! nx 16
//! ny 32
//! bounds 0 1 -1 1
//! field psi_mean
//! ```
//!
//! followed by `ny` lines of `nx` space-separated values, bottom row first.
//! Floats are written in their shortest round-trip representation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{gyre_count, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::linalg::{PreconditionerKind, SolverConfig};
use crate::mesh::{Bounds, StructuredMesh};
use crate::solver::{
    munk_scale, ForcingKind, ModelKind, PhysicalParams, RunOutput, Simulation, SimulationConfig,
    SolverStats, TimeParams,
};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "QGLES_OUTPUT_DIR";

const REQUIRED_KEYS: [&str; 8] = ["model", "ro", "re", "nx", "ny", "dt", "t_end", "avg_start"];
const OPTIONAL_KEYS: [&str; 14] = [
    "alpha",
    "t0",
    "l",
    "output_dir",
    "energy_cadence",
    "rel_tol",
    "abs_tol",
    "max_iter",
    "preconditioner",
    "forcing",
    "x_min",
    "x_max",
    "y_min",
    "y_max",
];

/// Parses a flat TOML document into a validated [`SimulationConfig`].
///
/// `alpha` defaults to the cell width `dx`.
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;

    let unknown: Vec<&str> = table
        .keys()
        .map(String::as_str)
        .filter(|k| !REQUIRED_KEYS.contains(k) && !OPTIONAL_KEYS.contains(k))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    let missing: Vec<&str> = REQUIRED_KEYS
        .iter()
        .copied()
        .filter(|k| !table.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
    }

    let get = Getter(&table);
    let model: ModelKind = get.string("model")?.expect("required").parse()?;
    let bounds = Bounds::new(
        get.float("x_min")?.unwrap_or(Bounds::DOUBLE_GYRE.x_min),
        get.float("x_max")?.unwrap_or(Bounds::DOUBLE_GYRE.x_max),
        get.float("y_min")?.unwrap_or(Bounds::DOUBLE_GYRE.y_min),
        get.float("y_max")?.unwrap_or(Bounds::DOUBLE_GYRE.y_max),
    );
    let nx = get.count("nx")?.expect("required");
    let ny = get.count("ny")?.expect("required");
    if nx == 0 || ny == 0 {
        return Err(Error::Config("nx and ny must be at least 1".into()));
    }
    let alpha = match get.float("alpha")? {
        Some(a) => a,
        None => bounds.width() / nx as f64,
    };
    let preconditioner = match get.string("preconditioner")?.as_deref() {
        None | Some("jacobi") => PreconditionerKind::Jacobi,
        Some("none") => PreconditionerKind::None,
        Some(other) => {
            return Err(Error::Config(format!(
                "preconditioner: expected 'jacobi' or 'none', got '{other}'"
            )))
        }
    };
    let forcing = match get.string("forcing")?.as_deref() {
        None | Some("double_gyre") => ForcingKind::DoubleGyre,
        Some("none") => ForcingKind::None,
        Some(other) => {
            return Err(Error::Config(format!(
                "forcing: expected 'double_gyre' or 'none', got '{other}'"
            )))
        }
    };
    let defaults = SolverConfig::default();
    let config = SimulationConfig {
        model,
        physics: PhysicalParams {
            ro: get.float("ro")?.expect("required"),
            re: get.float("re")?.expect("required"),
            l: get.float("l")?.unwrap_or(1.0),
        },
        alpha,
        nx,
        ny,
        bounds,
        time: TimeParams {
            dt: get.float("dt")?.expect("required"),
            t0: get.float("t0")?.unwrap_or(0.0),
            t_end: get.float("t_end")?.expect("required"),
            avg_start: get.float("avg_start")?.expect("required"),
        },
        energy_cadence: get.count("energy_cadence")?.map_or(100, |c| c as u64),
        solver: SolverConfig {
            rel_tol: get.float("rel_tol")?.unwrap_or(defaults.rel_tol),
            abs_tol: get.float("abs_tol")?.unwrap_or(defaults.abs_tol),
            max_iterations: get.count("max_iter")?,
            preconditioner,
        },
        forcing,
        output_dir: get.string("output_dir")?.map(PathBuf::from),
    };
    config.validate()?;
    if StructuredMesh::new(nx, ny, bounds).is_err() {
        return Err(Error::Config(format!("degenerate domain bounds {bounds:?}")));
    }
    Ok(config)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<SimulationConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

struct Getter<'a>(&'a toml::Table);

impl Getter<'_> {
    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(v)) => Ok(Some(*v)),
            Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(Error::Config(format!("{key}: expected a number, got {other}"))),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(v)) if *v >= 0 => Ok(Some(*v as usize)),
            Some(other) => Err(Error::Config(format!(
                "{key}: expected a non-negative integer, got {other}"
            ))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(v)) => Ok(Some(v.clone())),
            Some(other) => Err(Error::Config(format!("{key}: expected a string, got {other}"))),
        }
    }
}

/// Output directory: the environment override, else the configured one, else `output`.
pub fn resolve_output_dir(config: &SimulationConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("output")),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn format_energy_series(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("time,energy\n");
    for (t, e) in samples {
        writeln!(out, "{t},{e}").expect("writing to a String");
    }
    out
}

pub fn write_energy_series(record: &DiagnosticsRecord, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &format_energy_series(record.energy_series()))
}

pub fn read_energy_series(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some("time,energy") => {}
        other => return Err(parse_err(1, format!("expected header 'time,energy', got {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let (t, e) = line
                .split_once(',')
                .ok_or_else(|| parse_err(k + 2, "expected two columns".into()))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(k + 2, format!("{s:?}: {e}")))
            };
            Ok((num(t)?, num(e)?))
        })
        .collect()
}

/// A field as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub nx: usize,
    pub ny: usize,
    pub bounds: Bounds,
    pub name: String,
    /// Row-major, bottom row first.
    pub values: Vec<f64>,
}

pub fn format_field(mesh: &StructuredMesh, values: &[f64], name: &str) -> String {
    assert_eq!(values.len(), mesh.n_cells());
    let b = mesh.bounds();
    let mut out = String::new();
    writeln!(out, "nx {}", mesh.nx()).expect("writing to a String");
    writeln!(out, "ny {}", mesh.ny()).expect("writing to a String");
    writeln!(out, "bounds {} {} {} {}", b.x_min, b.x_max, b.y_min, b.y_max).expect("writing to a String");
    writeln!(out, "field {name}").expect("writing to a String");
    for row in values.chunks(mesh.nx()) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_field(
    mesh: &StructuredMesh,
    values: &[f64],
    name: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_text(path.as_ref(), &format_field(mesh, values, name))
}

pub fn read_field(path: impl AsRef<Path>) -> Result<GridField> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

fn parse_field(text: &str) -> std::result::Result<GridField, (usize, String)> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut header = |key: &str| -> std::result::Result<(usize, String), (usize, String)> {
        let (n, line) = lines
            .next()
            .ok_or((0, format!("missing '{key}' header line")))?;
        let rest = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or((n, format!("expected '{key} ...'")))?;
        Ok((n, rest.to_string()))
    };
    let num = |n: usize, s: &str| s.parse::<f64>().map_err(|e| (n, format!("{s:?}: {e}")));
    let (n, nx) = header("nx")?;
    let nx: usize = nx.trim().parse().map_err(|e| (n, format!("nx: {e}")))?;
    let (n, ny) = header("ny")?;
    let ny: usize = ny.trim().parse().map_err(|e| (n, format!("ny: {e}")))?;
    let (n, b) = header("bounds")?;
    let b: Vec<f64> = b.split_whitespace().map(|s| num(n, s)).collect::<std::result::Result<_, _>>()?;
    if b.len() != 4 {
        return Err((n, "bounds needs four numbers".into()));
    }
    let (_, name) = header("field")?;
    let mut values = Vec::with_capacity(nx * ny);
    let mut rows = 0;
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| num(n, s))
            .collect::<std::result::Result<_, _>>()?;
        if row.len() != nx {
            return Err((n, format!("expected {nx} values, got {}", row.len())));
        }
        values.extend(row);
        rows += 1;
    }
    if rows != ny {
        return Err((4 + rows, format!("expected {ny} rows, got {rows}")));
    }
    Ok(GridField {
        nx,
        ny,
        bounds: Bounds::new(b[0], b[1], b[2], b[3]),
        name: name.trim().to_string(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Summary written once per run, after completion or failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub config: SimulationConfig,
    pub munk_scale: f64,
    pub steps: u64,
    pub wall_clock_seconds: f64,
    pub finished_unix: u64,
    pub solver_stats: SolverStats,
    pub mean_energy: Option<f64>,
    pub gyre_count: Option<usize>,
    pub psi_mean_range: Option<(f64, f64)>,
    pub q_mean_range: Option<(f64, f64)>,
}

pub fn write_manifest(manifest: &RunManifest, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_text(path.as_ref(), &(text + "\n"))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn range(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Runs `config` and writes its outputs into `dir`:
/// `energy.csv`, `psi_mean.txt`, `q_mean.txt`, `a_mean.txt` (nonlinear filter
/// only), `psi_final.txt`, `q_final.txt` and `manifest.json`. The manifest is
/// written even when the run fails.
pub fn run_to_dir(config: SimulationConfig, dir: impl AsRef<Path>) -> Result<RunOutput> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let started = Instant::now();
    let mut sim = Simulation::new(config.clone())?;
    let result = sim.run();

    let finished_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: RunStatus::Failed,
        error: None,
        munk_scale: munk_scale(&config.physics),
        steps: 0,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        finished_unix,
        solver_stats: sim.stats(),
        mean_energy: None,
        gyre_count: None,
        psi_mean_range: None,
        q_mean_range: None,
        config,
    };
    let manifest_path = dir.join("manifest.json");

    let out = match result {
        Ok(out) => out,
        Err(e) => {
            manifest.error = Some(e.to_string());
            write_manifest(&manifest, &manifest_path)?;
            return Err(e);
        }
    };

    let mesh = &out.mesh;
    let psi_mean = out.record.psi_mean();
    let q_mean = out.record.q_mean();
    write_energy_series(&out.record, dir.join("energy.csv"))?;
    write_field(mesh, &psi_mean, "psi_mean", dir.join("psi_mean.txt"))?;
    write_field(mesh, &q_mean, "q_mean", dir.join("q_mean.txt"))?;
    if let Some(a_mean) = out.record.a_mean() {
        write_field(mesh, &a_mean, "a_mean", dir.join("a_mean.txt"))?;
    }
    write_field(mesh, out.final_state.psi.values(), "psi", dir.join("psi_final.txt"))?;
    write_field(mesh, out.final_state.q.values(), "q", dir.join("q_final.txt"))?;

    manifest.status = RunStatus::Completed;
    manifest.steps = out.final_state.step;
    manifest.mean_energy = Some(out.record.energy_mean());
    manifest.gyre_count = (mesh.ny() >= 2).then(|| gyre_count(mesh, &psi_mean));
    manifest.psi_mean_range = Some(range(&psi_mean));
    manifest.q_mean_range = Some(range(&q_mean));
    write_manifest(&manifest, &manifest_path)?;
    Ok(out)
}
