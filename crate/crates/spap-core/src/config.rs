//! Run configuration: a TOML file with a closed schema.
//!
//! Unknown keys are rejected everywhere. Every field has a documented
//! default except the model geometry. The resolved configuration is
//! embedded verbatim into every report for provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::altmin::AltMinConfig;
use crate::error::{Result, SpapError};
use crate::penalty::PenaltyConfig;
use crate::pipeline::Variant;

/// A scalar or a list; single values sweep over one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Model geometry and source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub model_dim: usize,
    pub hidden_dim: usize,
    #[serde(default)]
    pub residual: bool,
    /// Load weights from this container instead of generating them from
    /// the seed.
    #[serde(default)]
    pub container: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsityConfig {
    /// Overall model sparsity target(s); 0 is the no-pruning plan.
    pub overall: OneOrMany<f64>,
    #[serde(default = "default_mlp_share")]
    pub mlp_param_share: f64,
}

fn default_mlp_share() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Run the enumeration oracle per layer and record the gap.
    pub oracle_gap: bool,
    /// Subset cap for oracle runs; omit for the default one million.
    pub oracle_guard: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Sequence length for the analytic cost model and timing runs.
    pub seq_len: usize,
    /// Forward passes per timing measurement (median is reported).
    pub repetitions: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seq_len: 128,
            repetitions: 9,
        }
    }
}

fn default_variant() -> OneOrMany<Variant> {
    OneOrMany::One(Variant::Full)
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Recovery variant(s) to run.
    #[serde(default = "default_variant")]
    pub variant: OneOrMany<Variant>,
    pub model: ModelConfig,
    pub calibration: CalibrationConfig,
    pub sparsity: SparsityConfig,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub altmin: AltMinConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| SpapError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Serializes the resolved configuration back to TOML, e.g. to rerun a
    /// report's embedded config.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SpapError::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.layers == 0 || self.model.model_dim == 0 || self.model.hidden_dim == 0 {
            return Err(SpapError::Config(
                "model geometry must be positive in every dimension".to_string(),
            ));
        }
        if self.calibration.samples < 8 {
            return Err(SpapError::Config(format!(
                "calibration.samples = {} but at least 8 are needed for the held-out split",
                self.calibration.samples
            )));
        }
        let share = self.sparsity.mlp_param_share;
        if !(share > 0.0 && share <= 1.0) {
            return Err(SpapError::Config(format!(
                "sparsity.mlp_param_share = {share} must lie in (0, 1]"
            )));
        }
        for s in self.sparsity.overall.to_vec() {
            if !(0.0..1.0).contains(&s) {
                return Err(SpapError::Config(format!(
                    "sparsity.overall = {s} must lie in [0, 1)"
                )));
            }
            if s > 0.0 && s >= share {
                return Err(SpapError::Config(format!(
                    "overall sparsity {s} is not reachable by MLP-only pruning with \
                     mlp_param_share {share}"
                )));
            }
        }
        if self.variant.to_vec().is_empty() {
            return Err(SpapError::Config("variant list is empty".to_string()));
        }
        self.penalty.validate()?;
        self.altmin.validate()?;
        if self.bench.seq_len == 0 || self.bench.repetitions == 0 {
            return Err(SpapError::Config(
                "bench.seq_len and bench.repetitions must be positive".to_string(),
            ));
        }
        Ok(())
    }
}
