//! Run manifest: what was run, with which settings, and what it wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One manifest per subcommand, so `analyze` does not replace the record of
/// the `propagate` run it reads.
pub fn manifest_file(subcommand: &str) -> String {
    format!("manifest-{subcommand}.toml")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Keys that were not in the input file, as `section.key`.
    pub defaulted: Vec<String>,
    pub config: toml::Table,
    #[serde(default)]
    pub outputs: Vec<OutputFile>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl RunManifest {
    /// Records `relative` (a path under `dir`) with its checksum.
    pub fn add_output(&mut self, dir: &Path, relative: &str) -> Result<()> {
        let full = dir.join(relative);
        self.outputs.push(OutputFile {
            path: relative.replace('\\', "/"),
            sha256: sha256_file(&full)?,
            bytes: fs::metadata(&full)?.len(),
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(manifest_file(&self.subcommand));
        let text = toml::to_string(self).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
    }

    /// Outputs whose current checksum differs from the recorded one.
    pub fn stale_outputs(&self, dir: &Path) -> Result<Vec<String>> {
        let mut stale = Vec::new();
        for out in &self.outputs {
            if sha256_file(&dir.join(&out.path))? != out.sha256 {
                stale.push(out.path.clone());
            }
        }
        Ok(stale)
    }
}
