//! JSON run manifest written next to every output set.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub basis_fingerprint: String,
    pub seed: Option<u64>,
    pub package_version: String,
    pub snapshot_format_version: u32,
    pub threads: usize,
    pub steps: usize,
    pub t_final: f64,
    pub outputs: Vec<String>,
    /// `ERROR` line of a run that stopped early.
    pub failure: Option<String>,
}

impl Manifest {
    pub fn new(command: &str, config_hash: &str, basis_fingerprint: &str) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            basis_fingerprint: basis_fingerprint.to_string(),
            seed: None,
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            snapshot_format_version: super::snapshot::FORMAT_VERSION,
            threads: 1,
            steps: 0,
            t_final: 0.0,
            outputs: Vec::new(),
            failure: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), IoError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| IoError::Format(e.to_string()))?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| IoError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("solve", "abc", "def");
        m.seed = Some(5);
        m.outputs = vec!["snap_000000.bin".into()];
        m.write(dir.path()).unwrap();
        assert_eq!(Manifest::read(dir.path()).unwrap(), m);
    }
}
