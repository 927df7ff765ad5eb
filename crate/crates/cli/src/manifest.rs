use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one CLI invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: BTreeMap<String, PathBuf>,
    pub overrides: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub version: String,
    pub wall_clock_seconds: f64,
}

/// Collects manifest fields while a command runs.
pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64, out_dir: Option<&Path>) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                inputs: BTreeMap::new(),
                overrides: BTreeMap::new(),
                seed,
                out_dir: out_dir.map(Path::to_path_buf),
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_clock_seconds: 0.0,
            },
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.manifest.inputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.manifest.overrides.insert(key.to_string(), v);
        }
    }

    /// Writes the manifest into the output directory, if there is one.
    pub fn finish(mut self) -> Result<()> {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        if let Some(dir) = &self.manifest.out_dir {
            let path = dir.join(MANIFEST_FILE);
            let text = serde_json::to_string_pretty(&self.manifest)?;
            std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}
