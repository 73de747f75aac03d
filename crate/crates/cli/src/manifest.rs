//! Deterministic run manifests: what went in, what came out, and the
//! fingerprints needed to audit both.
//!
//! A manifest must never contain timestamps, host names, process ids or
//! other run-local state: two runs over the same inputs have to produce
//! byte-identical manifests so they can be diffed.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: "atscan",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Path as given on the command line plus a SHA-256 of the content.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn file_digest(path: &Path) -> io::Result<InputDigest> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(hasher.finalize()),
    })
}

/// Digest a fixture directory: covers every file name and its content
/// hash in sorted order, so adding, removing or editing any fixture
/// changes the digest.
pub fn dir_digest(path: &Path) -> io::Result<InputDigest> {
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|entry| {
            let entry = entry.ok()?;
            entry.path().is_file().then(|| entry.path())
        })
        .collect();
    files.sort();
    let mut hasher = Sha256::new();
    for file in files {
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        let bytes = fs::read(&file)?;
        hasher.update(Sha256::new().chain_update(&bytes).finalize());
    }
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(hasher.finalize()),
    })
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub inputs: BTreeMap<&'static str, InputDigest>,
    pub config: serde_json::Value,
    pub stages: serde_json::Value,
    /// Output file names in the run directory, sorted; the manifest itself
    /// is not listed.
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn write(&self, out_dir: &Path) -> io::Result<PathBuf> {
        let path = out_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
