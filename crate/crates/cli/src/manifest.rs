//! Run manifests written next to every file a command produces.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
    pub numeric: String,
    /// Seconds since the Unix epoch; omitted with `--no-timestamps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<u64>,
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) })
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Collects inputs and outputs of one command run.
pub struct Recorder {
    command: String,
    config: Value,
    numeric: &'static str,
    started: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(command: &str, config: Value, numeric: &'static str, timestamps: bool) -> Self {
        Self {
            command: command.into(),
            config,
            numeric,
            started: timestamps.then(now),
            inputs: vec![],
            outputs: vec![],
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    /// Writes `<first output>.manifest.json`; nothing when every output
    /// went to stdout.
    pub fn finish(self) -> Result<Option<PathBuf>> {
        let Some(first) = self.outputs.first() else {
            return Ok(None);
        };
        let mut name = first.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            inputs: self.inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
            outputs: self.outputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            numeric: self.numeric.into(),
            started_unix: self.started,
            finished_unix: self.started.map(|_| now()),
        };
        crate::write_json(&path, &serde_json::to_value(&manifest)?)?;
        Ok(Some(path))
    }
}
