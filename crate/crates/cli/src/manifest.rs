use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

/// Record of one CLI run: what was asked for and what was written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// The configuration actually used, after command-line overrides.
    pub config: serde_json::Value,
    pub started_at_ms: u128,
    pub finished_at_ms: u128,
    /// Output files, relative to the manifest's directory.
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_cells: Vec<FailedCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub cell: String,
    pub error: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or_default()
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, started_at_ms: u128) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            started_at_ms,
            finished_at_ms: started_at_ms,
            files: Vec::new(),
            failed_cells: Vec::new(),
        }
    }

    pub fn write(&mut self, dir: &Path) -> std::io::Result<()> {
        self.finished_at_ms = now_ms();
        if !self.files.iter().any(|f| f == MANIFEST_FILE) {
            self.files.push(MANIFEST_FILE.to_string());
        }
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }

    pub fn read(dir: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}
