use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn of(path: &Path) -> std::io::Result<Self> {
        let bytes = fs::read(path)?;
        Ok(Artifact {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Record of one command run: resolved configuration, seeds, and hashes of
/// everything read and written.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub duration_secs: f64,
}

pub struct ManifestBuilder {
    command: String,
    started: Instant,
    inputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn start(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            started: Instant::now(),
            inputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn finish(
        self,
        config: impl Serialize,
        seeds: serde_json::Value,
        outputs: &[PathBuf],
        dest: &Path,
    ) -> anyhow::Result<()> {
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config)?,
            seeds,
            inputs: self
                .inputs
                .iter()
                .map(|p| Artifact::of(p))
                .collect::<std::io::Result<_>>()?,
            outputs: outputs
                .iter()
                .map(|p| Artifact::of(p))
                .collect::<std::io::Result<_>>()?,
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        fs::write(dest, json)?;
        Ok(())
    }
}
