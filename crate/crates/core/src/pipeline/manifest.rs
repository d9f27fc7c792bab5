//! Run manifest: which config produced which artifacts, per stage.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cache::sha256_hex;
use super::io::{read_json, write_json};
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    pub exit_code: i32,
    pub seconds: f64,
    pub outputs: Vec<Artifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    /// The manifest in `out`, or a fresh one if it is missing or belongs to another config.
    pub fn open(out: &Path, config_hash: &str, seed: u64, threads: usize) -> Self {
        match read_json::<RunManifest>(&out.join(MANIFEST_FILE)) {
            Ok(m) if m.config_hash == config_hash => Self { seed, threads, ..m },
            _ => Self {
                config_hash: config_hash.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                threads,
                stages: Vec::new(),
            },
        }
    }

    /// Record a stage, hashing its output files, replacing any earlier record of it.
    pub fn record(&mut self, out: &Path, name: &str, status: &str, exit_code: i32, seconds: f64, files: &[String]) -> Result<()> {
        let outputs = files
            .iter()
            .map(|f| Ok(Artifact { path: f.clone(), sha256: sha256_hex(&std::fs::read(out.join(f))?) }))
            .collect::<Result<Vec<_>>>()?;
        self.stages.retain(|s| s.name != name);
        self.stages.push(StageRecord { name: name.into(), status: status.into(), exit_code, seconds, outputs });
        Ok(())
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        write_json(&out.join(MANIFEST_FILE), self)
    }
}
