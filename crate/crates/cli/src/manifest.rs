use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// A file produced by a command, held in memory until everything validated.
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

/// Everything a command computed, before anything touches the disk.
pub struct Run {
    pub artifacts: Vec<Artifact>,
    pub manifest: PathBuf,
    pub inputs: Vec<PathBuf>,
    pub seeds: Vec<u64>,
    /// Short human summary for stdout.
    pub report: String,
    /// Set when the command ran but found an invariant violation; reported
    /// after the artifacts are written.
    pub violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    /// Wall-clock time; the only field that differs between replays.
    pub duration_ms: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn record(path: &Path, bytes: &[u8]) -> FileRecord {
    FileRecord { path: path.to_path_buf(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 }
}

pub fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

impl Manifest {
    pub fn build(command: &str, config: Value, run: &Run, started: Instant) -> CliResult<Self> {
        let inputs = run
            .inputs
            .iter()
            .map(|p| read_input(p).map(|b| record(p, &b)))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds: run.seeds.clone(),
            inputs,
            outputs: run.artifacts.iter().map(|a| record(&a.path, &a.bytes)).collect(),
            duration_ms: started.elapsed().as_millis() as u64,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = read_input(path)?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::data(format!("{}: not a run manifest: {e}", path.display())))
    }

    /// Inputs whose current contents differ from the recorded digests.
    pub fn changed_inputs(&self) -> CliResult<Vec<PathBuf>> {
        let mut changed = Vec::new();
        for r in &self.inputs {
            if sha256_hex(&read_input(&r.path)?) != r.sha256 {
                changed.push(r.path.clone());
            }
        }
        Ok(changed)
    }
}

/// Writes every artifact, then the manifest.
pub fn commit(run: &Run, manifest: &Manifest) -> CliResult<()> {
    for a in &run.artifacts {
        write_file(&a.path, &a.bytes)?;
    }
    let mut text = serde_json::to_vec_pretty(manifest)?;
    text.push(b'\n');
    write_file(&run.manifest, &text)
}

/// JSON text with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}
