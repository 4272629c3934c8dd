use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Floating-point width of the discrepancy engines (double-double).
pub const ENGINE_PRECISION_BITS: u32 = 106;

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub subcommand: String,
    /// SHA-256 of the canonical TOML form of the effective config.
    pub inputs_hash: String,
    pub precision_bits: u32,
    pub engine_precision_bits: u32,
    pub engine: String,
    pub seed: u64,
    pub files: Vec<FileEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical serialization first, so formatting and field order in the input
/// file do not matter but every value does.
pub fn inputs_hash(cfg: &ExperimentConfig) -> Result<String, CliError> {
    Ok(sha256_hex(cfg.to_toml()?.as_bytes()))
}

/// Output directory that records what was written to it.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(FileEntry { name: name.into(), bytes: body.len(), sha256: sha256_hex(body.as_bytes()) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        body.push('\n');
        self.write(name, &body)
    }

    /// Writes `manifest.json` last and returns the names of all files.
    pub fn finish(mut self, cfg: &ExperimentConfig, subcommand: &str) -> Result<Vec<String>, CliError> {
        let manifest = Manifest {
            tool: "torusflow",
            version: env!("CARGO_PKG_VERSION"),
            core_version: torusflow_core::VERSION,
            subcommand: subcommand.into(),
            inputs_hash: inputs_hash(cfg)?,
            precision_bits: cfg.precision_bits,
            engine_precision_bits: ENGINE_PRECISION_BITS,
            engine: cfg.engine.kind.as_str().into(),
            seed: cfg.seed,
            files: self.files.clone(),
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(self.files.into_iter().map(|f| f.name).collect())
    }
}
