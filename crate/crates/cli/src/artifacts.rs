//! Output directory management: CSV files with schema sidecars, checkpoints
//! and the run manifest.

use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files written during one run, in write order.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    /// Write `name` and its `name.schema.json` sidecar listing the columns.
    pub fn write_csv(&mut self, name: &str, description: &str, csv: &str) -> Result<(), CliError> {
        let columns: Vec<&str> = csv.lines().next().unwrap_or("").split(',').collect();
        let schema = json!({ "file": name, "description": description, "columns": columns });
        self.write_bytes(name, csv.as_bytes())?;
        self.write_bytes(&format!("{name}.schema.json"), serde_json::to_string_pretty(&schema).unwrap().as_bytes())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        self.write_bytes(name, serde_json::to_string_pretty(value).unwrap().as_bytes())
    }

    /// Record a file written by other code (e.g. a checkpoint).
    pub fn register(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push((name.to_string(), sha256_hex(&bytes)));
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Manifest with the config hash, versions, seeds and per-file hashes.
    /// The timestamp is the only field that changes between identical runs.
    pub fn finish(mut self, config_json: &str, seeds: &[u64]) -> Result<PathBuf, CliError> {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let files: Vec<_> = self.written.iter().map(|(n, h)| json!({ "file": n, "sha256": h })).collect();
        let manifest = json!({
            "config_sha256": sha256_hex(config_json.as_bytes()),
            "mafla_version": mafla::VERSION,
            "cli_version": env!("CARGO_PKG_VERSION"),
            "seeds": seeds,
            "files": files,
            "created_unix": timestamp,
        });
        self.write_json("manifest.json", &manifest)?;
        Ok(self.dir.join("manifest.json"))
    }
}
