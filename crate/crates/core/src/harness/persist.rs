use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::binio::write_atomic;

pub fn snapshot_path(dir: &Path, prefix: &str, idx: usize, ext: &str) -> PathBuf {
    dir.join(format!("{prefix}_{idx:04}.{ext}"))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    write_atomic(path, text.as_bytes()).map_err(|e| HarnessError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

/// `index.csv`: snapshot number, step and time of a stream.
pub fn write_index(dir: &Path, steps: &[usize], times: &[f64]) -> Result<(), HarnessError> {
    let mut s = String::from("index,step,t\n");
    for (i, (st, t)) in steps.iter().zip(times).enumerate() {
        writeln!(s, "{i},{st},{t:?}").unwrap();
    }
    write_text(&dir.join("index.csv"), &s)
}

pub fn read_index(dir: &Path) -> Result<(Vec<usize>, Vec<f64>), HarnessError> {
    let path = dir.join("index.csv");
    let text = read_text(&path)?;
    let mut steps = Vec::new();
    let mut times = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || HarnessError::Config(format!("{}: malformed line {line:?}", path.display()));
        if f.len() != 3 {
            return Err(bad());
        }
        steps.push(f[1].parse().map_err(|_| bad())?);
        times.push(f[2].parse().map_err(|_| bad())?);
    }
    Ok((steps, times))
}

/// Provenance record written next to every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub version: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub sigma: f64,
    /// `(N, sigma_N)` pairs.
    pub sigma_n: Vec<(usize, f64)>,
    pub workers: usize,
    pub wall_time_s: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub failures: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let s = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_text(&dir.join("manifest.json"), &s)
    }

    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join("manifest.json");
        serde_json::from_str(&read_text(&path)?).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }
}
