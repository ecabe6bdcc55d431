//! Run manifest: the completion marker of an experiment.
//!
//! Written once, last, by atomic rename, so the presence of `manifest.json`
//! certifies that every listed output is complete and its digest final. An
//! interrupted run leaves no manifest and a rerun starts cleanly.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const ARTIFACT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputDigest {
    /// File name relative to the run directory.
    pub file: String,
    pub sha256: String,
    pub rows: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: u32,
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub budget_scale: f64,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn write_atomic(&self, dir: &Path) -> Result<PathBuf, HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join("manifest.json.partial");
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&tmp, text.as_bytes()).map_err(HarnessError::io(&tmp))?;
        fs::rename(&tmp, &path).map_err(HarnessError::io(&path))?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<RunManifest, HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn now_unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_and_replaces_partials() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = RunManifest {
            artifact_version: ARTIFACT_VERSION,
            experiment: "widths".into(),
            config_sha256: "ab".repeat(32),
            seed: 1,
            workers: 2,
            budget_scale: 1.0,
            started_unix_ms: 10,
            finished_unix_ms: 20,
            outputs: vec![OutputDigest { file: "rows.csv".into(), sha256: "cd".repeat(32), rows: 5 }],
        };
        manifest.write_atomic(dir.path()).unwrap();
        assert!(!dir.path().join("manifest.json.partial").exists());
        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back.outputs, manifest.outputs);
        assert_eq!(back.config_sha256, manifest.config_sha256);
    }
}
