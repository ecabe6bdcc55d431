//! Experiment harness: configuration, deterministic execution, CSV and
//! manifest persistence, and the verification suite.
//!
//! The contract is full determinism: a config plus a seed pins every random
//! draw through labeled substreams, trials are the parallel partition, and
//! rows are collected in trial order, so reruns produce byte-identical CSV
//! files at any worker count. The manifest is written last by atomic rename;
//! an interrupted run leaves data files but no manifest.

pub mod config;
pub mod csvio;
pub mod manifest;
pub mod runner;
pub mod verify;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use config::{Budgets, ExperimentConfig, ExperimentKind};
pub use csvio::Row;
pub use manifest::{OutputDigest, RunManifest, ARTIFACT_VERSION};
pub use runner::{run, RunOptions, RunReport};
pub use verify::{run_all_checks, CheckResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error("io failure on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("serialization failure: {0}")]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    Functional(#[from] crate::functionals::FunctionalError),
    #[error(transparent)]
    Entropy(#[from] crate::entropy::EntropyError),
    #[error(transparent)]
    Iso(#[from] crate::isoconst::IsoError),
    #[error(transparent)]
    Measure(#[from] crate::measures::MeasureError),
    #[error(transparent)]
    Polytope(#[from] crate::polytope::PolytopeError),
}

impl HarnessError {
    fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}
