//! Report files: machine-parseable JSON embedding the resolved config and
//! one record per (sparsity, variant) run, plus the CSV projection used for
//! plotting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Result, SpapError};
use crate::pipeline::{PruneReport, Variant};

/// One pruning run inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: Variant,
    pub overall_sparsity: f64,
    pub report: PruneReport,
}

/// The on-disk report: resolved configuration plus all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: RunConfig,
    pub runs: Vec<RunRecord>,
}

impl ReportFile {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| SpapError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SpapError::Format(e.to_string()))
    }

    /// Atomic write via a temporary sibling file.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_json()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// CSV series `variant,sparsity,error` (held-out end-to-end error),
    /// one row per run, runs in file order. Always emits the header.
    pub fn to_plot_csv(&self) -> String {
        let mut out = String::from("variant,sparsity,error\n");
        for run in &self.runs {
            out.push_str(&format!(
                "{},{},{}\n",
                run.variant.slug(),
                run.overall_sparsity,
                run.report.end_to_end_error
            ));
        }
        out
    }
}
