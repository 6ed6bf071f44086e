//! Run record written next to every command's output.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the input file bytes; absent for commands without input.
    pub input_digest: Option<String>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
    /// SHA-256 of the bytes written as the command's main output.
    pub output_digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: String, input: Option<&[u8]>, seed: u64, output: &[u8]) -> Self {
        Self {
            command,
            input_digest: input.map(sha256_hex),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            output_digest: sha256_hex(output),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// `<out>.manifest.json` for an output file.
pub fn default_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes the manifest to `explicit`, or beside `out`, or to stderr when the
/// output went to stdout.
pub fn emit(manifest: &RunManifest, explicit: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let path = explicit.map(Path::to_path_buf).or_else(|| out.map(default_manifest_path));
    match path {
        Some(p) => std::fs::write(&p, manifest.to_json()).with_context(|| format!("failed to write {}", p.display())),
        None => {
            eprintln!("{}", serde_json::to_string(manifest).expect("manifest serializes"));
            Ok(())
        }
    }
}
