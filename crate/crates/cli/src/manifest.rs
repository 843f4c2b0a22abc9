//! Run manifests: every command records what it ran, with what
//! parameters and seed, and a SHA-256 digest of every file it read or
//! wrote. Re-running a command with the recorded parameters must
//! reproduce the recorded output digests.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub artifact_version: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub duration_seconds: f64,
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let mut file =
        File::open(path).with_context(|| format!("cannot open {} for hashing", path.display()))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher)?;
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_hex(p)?,
            })
        })
        .collect()
}

/// Writes `manifest.json` into `out_dir` and returns its path.
#[allow(clippy::too_many_arguments)]
pub fn write(
    out_dir: &Path,
    command: &str,
    parameters: serde_json::Value,
    seed: Option<u64>,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    elapsed: Duration,
) -> Result<PathBuf> {
    let manifest = RunManifest {
        command: command.to_string(),
        parameters,
        seed,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        inputs: digests(inputs)?,
        outputs: digests(outputs)?,
        duration_seconds: elapsed.as_secs_f64(),
    };
    let path = out_dir.join("manifest.json");
    wardsel::io::write_json(&path, &manifest)?;
    Ok(path)
}
