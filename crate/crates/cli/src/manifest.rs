//! Run manifests: one JSON file per invocation recording the argv, resolved
//! configuration, inputs, outputs and timing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Arguments after the program name; replaying parses these again.
    pub args: Vec<String>,
    pub config: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub converged: Option<bool>,
    pub wall_time_s: f64,
    pub versions: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Collects manifest fields while a command runs.
pub struct Run {
    manifest: Manifest,
    out_dir: PathBuf,
    start: Instant,
}

impl Run {
    pub fn start(command: &str, args: &[String], out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        let mut versions = BTreeMap::new();
        versions.insert("rgc".to_string(), env!("CARGO_PKG_VERSION").to_string());
        Ok(Run {
            manifest: Manifest {
                command: command.to_string(),
                args: args.to_vec(),
                config: BTreeMap::new(),
                inputs: BTreeMap::new(),
                outputs: Vec::new(),
                seed: None,
                converged: None,
                wall_time_s: 0.0,
                versions,
            },
            out_dir: out_dir.to_path_buf(),
            start: Instant::now(),
        })
    }

    pub fn config(&mut self, key: &str, value: impl Into<Value>) {
        self.manifest.config.insert(key.to_string(), value.into());
    }

    pub fn input(&mut self, role: &str, path: &Path) {
        self.manifest
            .inputs
            .insert(role.to_string(), path.display().to_string());
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn converged(&mut self, converged: bool) {
        self.manifest.converged = Some(converged);
    }

    /// Path for an output file in the run's directory, recorded in the
    /// manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        let p = self.out_dir.join(name);
        self.manifest.outputs.push(p.display().to_string());
        p
    }

    pub fn finish(mut self) -> Result<()> {
        self.manifest.wall_time_s = self.start.elapsed().as_secs_f64();
        let path = self.out_dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)?;
        rgc_core::io::write_atomic(&path, |w| writeln!(w, "{json}"))?;
        Ok(())
    }
}
