//! Experiment configuration: a single JSON document, validated with
//! field-level messages and hashed canonically so manifests can pin it.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::measures::DistributionKind;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Widths,
    Quermass,
    Radii,
    Sections,
    Entropy,
    Isoconst,
    Tails,
    Inclusion,
    Scaling,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Widths => "widths",
            ExperimentKind::Quermass => "quermass",
            ExperimentKind::Radii => "radii",
            ExperimentKind::Sections => "sections",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::Isoconst => "isoconst",
            ExperimentKind::Tails => "tails",
            ExperimentKind::Inclusion => "inclusion",
            ExperimentKind::Scaling => "scaling",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Monte Carlo budgets, before any `--budget-scale` adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    /// Sphere direction draws (mean widths, gauge means).
    pub sphere: usize,
    /// Grassmannian frame draws (quermass profiles, projection radii).
    pub subspaces: usize,
    /// Directions per frame or per comparison (sections, inclusion).
    pub directions: usize,
    /// Volume / calibration sample draws.
    pub volume: usize,
    /// Interior point draws (moment sampling).
    pub interior: usize,
    /// Boundary pool size for covering estimates.
    pub pool: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { sphere: 512, subspaces: 64, directions: 256, volume: 8192, interior: 4096, pool: 1024 }
    }
}

impl Budgets {
    pub fn scaled(self, factor: f64) -> Self {
        let scale = |b: usize| ((b as f64 * factor).ceil() as usize).max(2);
        Budgets {
            sphere: scale(self.sphere),
            subspaces: scale(self.subspaces),
            directions: scale(self.directions),
            volume: scale(self.volume),
            interior: scale(self.interior),
            pool: scale(self.pool),
        }
    }

    fn check(&self) -> Result<(), HarnessError> {
        let fields: [(&'static str, usize); 6] = [
            ("budgets.sphere", self.sphere),
            ("budgets.subspaces", self.subspaces),
            ("budgets.directions", self.directions),
            ("budgets.volume", self.volume),
            ("budgets.interior", self.interior),
            ("budgets.pool", self.pool),
        ];
        for (field, value) in fields {
            if value == 0 {
                return Err(HarnessError::Config {
                    field,
                    message: "budget must be positive".into(),
                });
            }
        }
        Ok(())
    }
}

/// One experiment: a distribution, the polytope sizes, the parameter grids,
/// and the budgets. `vertex_counts` accepts a single integer or an array in
/// JSON under the key "N".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub distribution: DistributionKind,
    pub n: usize,
    #[serde(rename = "N", deserialize_with = "one_or_many")]
    pub vertex_counts: Vec<usize>,
    #[serde(default)]
    pub k_list: Vec<usize>,
    #[serde(default)]
    pub q_list: Vec<f64>,
    #[serde(default)]
    pub t_list: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub budgets: Budgets,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn one_or_many<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |field: &'static str, message: String| Err(HarnessError::Config { field, message });
        if self.n < 2 {
            return fail("n", format!("dimension must be at least 2, got {}", self.n));
        }
        if self.vertex_counts.is_empty() {
            return fail("N", "at least one vertex count is required".into());
        }
        for &count in &self.vertex_counts {
            if count < self.n {
                return fail(
                    "N",
                    format!(
                        "the model requires N >= n (vertex count at least the dimension); got N = {count} with n = {}",
                        self.n
                    ),
                );
            }
        }
        if self.trials < 1 {
            return fail("trials", "at least one trial is required".into());
        }
        self.budgets.check()?;
        for &k in &self.k_list {
            if k == 0 || k > self.n {
                return fail("k_list", format!("projection rank {k} outside 1..={}", self.n));
            }
        }
        for &q in &self.q_list {
            if !q.is_finite() {
                return fail("q_list", format!("moment order {q} must be finite"));
            }
        }
        for &t in &self.t_list {
            if !(t.is_finite() && t > 0.0) {
                return fail("t_list", format!("scale {t} must be positive and finite"));
            }
        }
        match self.experiment {
            ExperimentKind::Quermass | ExperimentKind::Radii | ExperimentKind::Sections
                if self.k_list.is_empty() =>
            {
                fail("k_list", format!("{} needs at least one k", self.experiment))
            }
            ExperimentKind::Scaling if self.k_list.is_empty() => {
                fail("k_list", "scaling needs at least one k".into())
            }
            ExperimentKind::Scaling if self.vertex_counts.len() < 2 => {
                fail("N", "scaling needs a grid of at least two vertex counts".into())
            }
            ExperimentKind::Inclusion if self.q_list.is_empty() => {
                fail("q_list", "inclusion needs at least one moment order q".into())
            }
            ExperimentKind::Entropy if self.t_list.is_empty() => {
                fail("t_list", "entropy needs a grid of covering scales".into())
            }
            _ => Ok(()),
        }
    }

    /// Canonical JSON: serde field order is fixed by the struct, so the
    /// serialized document is deterministic.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        hex(&hasher.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
