//! Configuration, file formats, ensembles and the command-line front end.

mod commands;
mod config;
mod ensemble;
mod format;

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::SimConfig;

pub use commands::{run, Cli, Command, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};
pub use config::{parse_config, parse_config_str, resolve_initial};
pub use ensemble::{ensemble, run_path, summarize, EnsembleResult, EnsembleStats, PathFailure, PathSummary};
pub use format::{
    encode_binary, encode_jump_log, encode_ndjson, read_jump_log, read_ndjson, read_trajectory_binary,
    write_jump_log, write_trajectory, Format, ManifestEntry, NdjsonRecord, StoredSample, StoredTrajectory,
    MAGIC, VERSION,
};

/// Everything needed to regenerate a command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: SimConfig,
    pub master_seed: u64,
    /// Command-specific parameters (paths, workers, deltas, ...).
    pub parameters: serde_json::Value,
    pub code_version: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<ManifestEntry>,
    pub failures: Vec<PathFailure>,
}

pub(crate) fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &str, config: &SimConfig, parameters: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config: config.clone(),
            master_seed: config.seed,
            parameters,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started: unix_now(),
            finished: 0.0,
            outputs: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn write(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.finished = unix_now();
        let path = path.as_ref();
        let text = serde_json::to_vec_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Write `value` as pretty JSON and return its manifest entry.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<ManifestEntry> {
    let mut data = serde_json::to_vec_pretty(value)?;
    data.push(b'\n');
    format::write_file(path.as_ref(), "json", &data)
}
