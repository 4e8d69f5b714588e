//! Run manifest written next to pipeline outputs.

use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Record of one pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub command_line: Vec<String>,
    /// SHA-256 of the configuration bytes, lowercase hex.
    pub config_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_unix_s: u64,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, config: &[u8], seed: u64, started: Instant, outputs: Vec<String>) -> Self {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let wall = started.elapsed().as_secs_f64();
        RunManifest {
            command: command.to_string(),
            command_line: std::env::args().collect(),
            config_sha256: digest(config),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_s: now.saturating_sub(wall as u64),
            wall_time_s: wall,
            outputs,
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?).with_context(|| format!("writing {}", path.display()))
    }
}
