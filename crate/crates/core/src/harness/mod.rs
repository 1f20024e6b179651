//! Configuration, single runs, studies over `(N, seed)` cells, persistence and plots.
//!
//! A study directory holds everything needed to recompute its tables offline:
//!
//! ```text
//! config.toml  manifest.json  errors.csv  means.csv  rates.csv  chaos.csv  chaos_summary.csv
//! limit/        u_XXXX.kfld f_XXXX.kphd index.csv diagnostics.csv manifest.json
//! aux_N{n}/     same layout, one per N
//! cells/N{n}_s{seed}/  u_XXXX.kfld p_XXXX.kprt lp_XXXX.kprt index.csv diagnostics.csv cell.json
//! plots/        *.svg
//! ```

mod config;
mod persist;
pub mod plot;
mod runs;
mod study;

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::metrics::MetricsError;

pub use config::{
    check_study_schedule, validate, Check, ExperimentConfig, InitialDensity, InitialField, SigmaRule, ValidationReport,
};
pub use persist::{read_index, snapshot_path, Manifest};
pub use runs::{
    initial_particles, run_coupled, run_limit, CoupledRun, LimitRun, LimitRunMode, COUPLED_CSV_HEADER, LIMIT_CSV_HEADER,
};
pub use study::{
    cell_record, chaos_study, convergence_study, replot, run_study, summarize, write_coupled_runs, write_limit_runs,
    CellStream, ChaosRow, ChaosSummary, MeanRow, RateRow, StudyKind, StudyOutcome, Summary, CHAOS_CSV_HEADER, CHAOS_SUMMARY_CSV_HEADER,
    MEANS_CSV_HEADER, RATES_CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config rejected: {0}")]
    Config(String),
    #[error("config violates its assumptions:\n{0}")]
    Validation(ValidationReport),
    #[error("{run}: solver failed at step {step}: {message}")]
    Solver { run: String, step: usize, message: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl HarnessError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 for a rejected config, 3 for a failed computation, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Validation(_) => 2,
            Self::Solver { .. } | Self::Metrics(_) => 3,
            Self::Io { .. } => 1,
        }
    }
}

/// Parses and validates, returning the config only if every check passes.
pub fn load_validated(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let cfg = ExperimentConfig::load(path)?;
    let report = validate(&cfg);
    if !report.passed() {
        return Err(HarnessError::Validation(report));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests;
