use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Seeds};
use crate::error::{CliError, CliResult};

pub const FILE_NAME: &str = "provenance.json";

#[derive(Debug, Serialize)]
pub struct Artifact {
    /// Relative to the directory holding the provenance file.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub command: String,
    pub toolkit_version: String,
    pub config_sha256: String,
    pub seeds: Seeds,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the effective config (after flag overrides), in serialized field order.
pub fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(&serde_json::to_vec(cfg).expect("config serializes"))
}

/// Writes `<dir>/provenance.json` covering `files`, which live under `dir`.
pub fn write(dir: &Path, command: &str, cfg: &RunConfig, files: &[PathBuf]) -> CliResult<()> {
    let mut artifacts = Vec::with_capacity(files.len());
    for f in files {
        let bytes = std::fs::read(f).map_err(|e| CliError::usage(format!("cannot read {}: {e}", f.display())))?;
        let rel = f.strip_prefix(dir).unwrap_or(f);
        artifacts.push(Artifact { path: rel.to_string_lossy().into_owned(), sha256: sha256_hex(&bytes) });
    }
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let p = Provenance {
        command: command.to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(cfg),
        seeds: cfg.seeds.clone(),
        artifacts,
    };
    scarseg::vio::write_json(&p, &dir.join(FILE_NAME))?;
    Ok(())
}
