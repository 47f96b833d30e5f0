use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    pub outputs: Vec<PathBuf>,
    pub status: String,
    pub error: Option<String>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(command: &str, config: Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            seeds: Vec::new(),
            code_version: supgnet::VERSION.to_string(),
            started_unix: unix_now(),
            finished_unix: None,
            outputs: Vec::new(),
            status: "running".into(),
            error: None,
        }
    }

    pub fn path_in(out_dir: &Path, command: &str) -> PathBuf {
        out_dir.join(format!("{command}.manifest.json"))
    }

    /// Writes the manifest; keys come out sorted because `serde_json`
    /// maps are ordered.
    pub fn write(&self, out_dir: &Path) -> std::io::Result<PathBuf> {
        fs::create_dir_all(out_dir)?;
        let path = Self::path_in(out_dir, &self.command);
        let value = serde_json::to_value(self).map_err(std::io::Error::other)?;
        let mut text = serde_json::to_string_pretty(&value).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
