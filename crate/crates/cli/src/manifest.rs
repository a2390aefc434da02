//! Run manifest written next to every command's outputs.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub arguments: Vec<String>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub started_unix_ms: u128,
    pub duration_ms: u128,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::read(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn records(paths: &[PathBuf]) -> Result<Vec<FileRecord>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileRecord {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// Collects inputs and outputs during a run.
pub struct Recorder {
    subcommand: &'static str,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: SystemTime,
    clock: Instant,
}

impl Recorder {
    pub fn start(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes the manifest to `path`.
    pub fn finish(self, path: &Path) -> Result<(), CliError> {
        let manifest = RunManifest {
            subcommand: self.subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            arguments: std::env::args().skip(1).collect(),
            inputs: records(&self.inputs)?,
            outputs: records(&self.outputs)?,
            started_unix_ms: self
                .started
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis()),
            duration_ms: self.clock.elapsed().as_millis(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::internal(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::write(path, e))
    }
}

/// `<dir>/<stem>.manifest.json` for an output file.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.manifest.json"))
}
