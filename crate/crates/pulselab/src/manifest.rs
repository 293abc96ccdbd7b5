//! Per-run manifest written next to the artifacts.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config_digest: String,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub duration_s: f64,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn new(command: &str, argv: Vec<String>, config_digest: String) -> Self {
        RunManifest {
            command: command.to_string(),
            argv,
            config_digest,
            seeds: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_s: 0.0,
            artifacts: Vec::new(),
        }
    }

    /// Records a written file with its digest.
    pub fn add_artifact(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        self.artifacts.push(Artifact {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, toml::to_string(self)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }
}
