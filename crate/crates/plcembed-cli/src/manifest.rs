//! Run manifest: a JSON record of what a command did, written next to its
//! artifacts. Contains only the resolved configuration, seed, and artifact
//! paths relative to the manifest — no timestamps, absolute paths, or raw
//! argv — so identical runs into different directories produce byte-identical
//! manifests.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// Subcommand name.
    pub command: &'static str,
    /// Crate version that produced the artifacts.
    pub version: &'static str,
    /// The seed the run actually used after all defaulting.
    pub seed: u64,
    /// Fully resolved configuration, not just the overrides.
    pub config: serde_json::Value,
    /// Artifact paths relative to the directory holding this manifest.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            artifacts: Vec::new(),
        }
    }
}

/// Serialize the manifest into `dir/manifest.json`.
pub fn write_manifest(manifest: &RunManifest, dir: &Path) -> Result<(), CliError> {
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Config(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    fs::write(&path, text).map_err(|source| CliError::Io { path, source })
}
