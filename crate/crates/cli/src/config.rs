//! Config files for the subcommands. Every file carries `schema_version`.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use entangled_core::engine::{AverageMode, ChainSpec, Strategy};
use entangled_core::limits::{Predictor, Sequence};
use entangled_core::space::SamplePoints;
use entangled_core::{FunctionRep, OperatorSpec, SystemDescriptor};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Naive-equivalent term count above which `naive` runs are refused.
pub const DEFAULT_MAX_NAIVE_TERMS: f64 = 1e9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// `start · ratio^i` for `i < count`.
    Geometric { start: f64, ratio: f64, count: usize },
    List { values: Vec<f64> },
}

impl ScheduleSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        let points = match self {
            ScheduleSpec::Geometric { start, ratio, count } => {
                ensure!(*start > 0.0 && *ratio > 1.0, "geometric schedule needs start > 0 and ratio > 1");
                (0..*count).map(|i| start * ratio.powi(i as i32)).collect()
            }
            ScheduleSpec::List { values } => values.clone(),
        };
        ensure!(points.len() >= 3, "schedule needs at least 3 points, got {}", points.len());
        Ok(points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSpec {
    Seeded { count: usize, seed: u64 },
    Explicit { points: SamplePoints },
}

/// Pass/fail conditions evaluated on the distance column.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunChecks {
    /// Sup distance at the last schedule point must not exceed this.
    #[serde(default)]
    pub final_sup_at_most: Option<f64>,
    #[serde(default)]
    pub final_l2_at_most: Option<f64>,
    /// The sup distances must not increase along the schedule.
    #[serde(default)]
    pub sup_nonincreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub chain: ChainSpec,
    pub schedule: ScheduleSpec,
    #[serde(default = "default_predictor")]
    pub predictor: Predictor,
    #[serde(default)]
    pub samples: Option<SampleSpec>,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default = "default_mode")]
    pub mode: AverageMode,
    #[serde(default)]
    pub cache_mb: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_max_naive_terms")]
    pub max_naive_terms: f64,
    #[serde(default)]
    pub checks: RunChecks,
}

fn default_predictor() -> Predictor {
    Predictor::None
}

fn default_mode() -> AverageMode {
    AverageMode::Average
}

fn default_max_naive_terms() -> f64 {
    DEFAULT_MAX_NAIVE_TERMS
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let points = self.schedule.points()?;
        if let Some(SampleSpec::Seeded { count, .. }) = &self.samples {
            ensure!(*count >= 1, "sample count must be at least 1");
        }
        if let Some(SampleSpec::Explicit { points }) = &self.samples {
            ensure!(!points.is_empty(), "sample list is empty");
        }
        let flow = matches!(self.mode, AverageMode::Flow { .. });
        ensure!(flow == self.chain.is_continuous(), "mode {:?} does not match a continuous = {} chain", self.mode, self.chain.is_continuous());
        let enumerates = self.strategy == Strategy::Naive || matches!(self.mode, AverageMode::Abs { .. });
        if !flow && enumerates {
            let u = self.chain.used_classes().len() as i32;
            let cost: f64 = points.iter().map(|n| n.powi(u) * self.chain.m() as f64).sum();
            if cost > self.max_naive_terms {
                bail!(
                    "naive-equivalent cost {cost:.3e} exceeds max_naive_terms = {:.3e}; use the cached or factorized strategy or a smaller schedule",
                    self.max_naive_terms
                );
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub schema_version: u32,
    pub system: SystemDescriptor,
    pub f: FunctionRep,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub operators: Vec<OperatorSpec>,
    pub systems: Vec<SystemDescriptor>,
    pub test_functions: Vec<FunctionRep>,
    #[serde(default)]
    pub at_most: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub schema_version: u32,
    pub operator: OperatorSpec,
    pub system: SystemDescriptor,
    pub f: FunctionRep,
    pub dims: Vec<usize>,
    pub n_max: usize,
    /// Residual at the largest dim must not exceed this.
    #[serde(default)]
    pub final_residual_at_most: Option<f64>,
    #[serde(default)]
    pub joint: Option<JointSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub schema_version: u32,
    pub sequence: Sequence,
    pub n_max: u64,
    pub tol: f64,
    /// Expected class-𝒩 verdict; a mismatch is a check failure.
    #[serde(default)]
    pub expect_member: Option<bool>,
    /// Also report the index set `|a_n| <= density_tol` for explicit sequences.
    #[serde(default)]
    pub density_tol: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Read a config file, check its schema version.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    ensure!(
        version == Some(SCHEMA_VERSION as u64),
        "{}: schema_version must be {SCHEMA_VERSION}, found {version:?}",
        path.display()
    );
    serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
}
