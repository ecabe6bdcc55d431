//! Long-format CSV rows and the deterministic writer.
//!
//! One file per experiment, fixed header, rows in trial order. The writer
//! serializes into memory first so the digest recorded in the manifest is
//! the digest of exactly the bytes on disk.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::hex;
use super::HarnessError;

pub const CSV_HEADER: &str = "trial,functional,k,q,t,value,stderr,budget,seed";

/// One measurement. Optional columns stay empty in the CSV; `seed` is the id
/// of the substream that produced the row, so any row can be recomputed in
/// isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub trial: u64,
    pub functional: String,
    pub k: Option<usize>,
    pub q: Option<f64>,
    pub t: Option<f64>,
    pub value: f64,
    pub stderr: f64,
    pub budget: u64,
    pub seed: u64,
}

impl Row {
    pub fn new(trial: u64, functional: impl Into<String>, value: f64) -> Self {
        Row {
            trial,
            functional: functional.into(),
            k: None,
            q: None,
            t: None,
            value,
            stderr: 0.0,
            budget: 0,
            seed: 0,
        }
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    pub fn t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn stderr(mut self, se: f64) -> Self {
        self.stderr = se;
        self
    }

    pub fn budget(mut self, budget: usize) -> Self {
        self.budget = budget as u64;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Serialize rows to CSV bytes with the fixed header.
pub fn to_bytes(rows: &[Row]) -> Result<Vec<u8>, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| HarnessError::Config {
            field: "rows",
            message: format!("csv serialization failed: {e}"),
        })?;
    }
    writer
        .into_inner()
        .map_err(|e| HarnessError::Config { field: "rows", message: format!("csv flush failed: {e}") })
}

/// Write rows to `path` via a temporary file and rename; returns the sha256
/// hex digest of the written bytes.
pub fn write_rows(path: &Path, rows: &[Row]) -> Result<String, HarnessError> {
    let bytes = to_bytes(rows)?;
    let digest = hex(&Sha256::digest(&bytes));
    let tmp = path.with_extension("csv.partial");
    fs::write(&tmp, &bytes).map_err(HarnessError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(HarnessError::io(path))?;
    Ok(digest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_empty_columns_are_fixed() {
        let rows = vec![
            Row::new(0, "mean_width", 1.25).stderr(0.01).budget(512).seed(42),
            Row::new(1, "quermass", 1.5).k(3).q(2.0).t(0.5),
        ];
        let bytes = to_bytes(&rows).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "0,mean_width,,,,1.25,0.01,512,42");
        assert_eq!(lines.next().unwrap(), "1,quermass,3,2.0,0.5,1.5,0.0,0,0");
    }

    #[test]
    fn writing_is_atomic_and_digest_matches_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![Row::new(0, "radius", 2.0)];
        let digest = write_rows(&path, &rows).unwrap();
        let on_disk = std::fs::read(&path).unwrap();
        assert_eq!(digest, hex(&sha2::Sha256::digest(&on_disk)));
        assert!(!dir.path().join("rows.csv.partial").exists());
    }
}
