//! `report.json`, CSV plot data and the `run.json` manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use shrinker_core::discrete::{Grid, Topology};

use crate::config::{hex, ExperimentConfig};
use crate::error::LabResult;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "SHRINKER_LAB_THREADS";

#[derive(Debug, Clone)]
pub struct Table {
    /// file stem, written as `<name>.csv`
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Outcome of one subcommand.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub pass: bool,
    pub results: Map<String, Value>,
    pub grid: Value,
    /// closed forms the results were compared against
    pub oracles: Vec<String>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            pass: true,
            results: Map::new(),
            grid: Value::Null,
            oracles: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn oracle(&mut self, what: &str) {
        self.oracles.push(what.to_string());
    }

    /// Document stored in `report.json`.
    pub fn to_json(&self, cfg: &ExperimentConfig) -> Value {
        let config: Map<String, Value> =
            cfg.entries().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect();
        json!({
            "command": self.command,
            "config": config,
            "config_hash": cfg.hash(),
            "grid": self.grid,
            "oracles": self.oracles,
            "pass": self.pass,
            "results": self.results,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

/// JSON number, or `null` when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Shortest round-trip decimal, `.` separator.
pub fn cell(x: f64) -> String {
    format!("{x:e}")
}

pub fn grid_json(grid: &Grid) -> Value {
    let topology = match grid.topology() {
        Topology::TruncatedLine { half_length, spacing } => {
            json!({"kind": "line", "half_length": num(half_length), "spacing": num(spacing)})
        }
        Topology::PeriodicLine { period, .. } => {
            json!({"kind": "periodic", "period": num(period), "spacing": num(grid.spacing())})
        }
        Topology::CylinderProduct { polar, azimuthal, axial_half_length, axial_spacing } => json!({
            "kind": "cylinder",
            "polar": polar,
            "azimuthal": azimuthal,
            "axial_half_length": num(axial_half_length),
            "axial_spacing": num(axial_spacing),
        }),
    };
    json!({"model": grid.model().to_string(), "nodes": grid.len(), "topology": topology})
}

fn write_csv(path: &Path, table: &Table) -> LabResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn sha256_file(path: &Path) -> LabResult<String> {
    let bytes = fs::read(path)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Write `report.json`, every table and `run.json` into the configured directory.
pub fn write_outputs(report: &Report, cfg: &ExperimentConfig, elapsed: Duration) -> LabResult<Vec<PathBuf>> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    let report_path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report.to_json(cfg))?;
    text.push('\n');
    fs::write(&report_path, text)?;
    written.push(report_path);
    for t in &report.tables {
        let p = dir.join(format!("{}.csv", t.name));
        write_csv(&p, t)?;
        written.push(p);
    }
    let files: Vec<Value> = written
        .iter()
        .map(|p| -> LabResult<Value> {
            let name = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(json!({"name": name, "sha256": sha256_file(p)?}))
        })
        .collect::<LabResult<_>>()?;
    let manifest = json!({
        "command": report.command,
        "config_hash": cfg.hash(),
        "elapsed_seconds": num(elapsed.as_secs_f64()),
        "files": files,
        "pass": report.pass,
        "threads": rayon::current_num_threads(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let run_path = dir.join("run.json");
    fs::write(&run_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    written.push(run_path);
    Ok(written)
}

/// Size the global pool from `SHRINKER_LAB_THREADS` when set.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_null() {
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(1.5), json!(1.5));
    }

    #[test]
    fn report_keys_are_sorted() {
        let cfg = ExperimentConfig::for_command("entropy");
        let mut r = Report::new("entropy");
        r.set("zeta", 1);
        r.set("alpha", 2);
        let text = serde_json::to_string(&r.to_json(&cfg)).unwrap();
        assert!(text.find("\"alpha\"").unwrap() < text.find("\"zeta\"").unwrap());
        assert!(text.find("\"command\"").unwrap() < text.find("\"version\"").unwrap());
    }
}
