//! Run manifest: config snapshot, tool version, timestamps and cell ledger.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use foldlab::harness::{CellKey, ExperimentConfig, RunReport};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Done,
    Failed,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    #[serde(flatten)]
    pub key: CellKey,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub workers: Option<usize>,
    pub cells: Vec<CellEntry>,
}

impl RunManifest {
    pub fn start(config: &ExperimentConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            started_at: Utc::now(),
            finished_at: None,
            workers: None,
            cells: config
                .cells()
                .into_iter()
                .map(|key| CellEntry { key, status: CellStatus::Pending, error: None })
                .collect(),
        }
    }

    pub fn finish(&mut self, report: &RunReport) {
        let done: BTreeMap<CellKey, ()> = report.records.iter().map(|r| (r.key(), ())).collect();
        let failed: BTreeMap<&CellKey, &str> = report.failures.iter().map(|f| (&f.key, f.error.as_str())).collect();
        for cell in &mut self.cells {
            if done.contains_key(&cell.key) {
                cell.status = CellStatus::Done;
                cell.error = None;
            } else if let Some(e) = failed.get(&cell.key) {
                cell.status = CellStatus::Failed;
                cell.error = Some(e.to_string());
            }
        }
        self.workers = Some(report.workers);
        self.finished_at = Some(Utc::now());
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.cells.iter().filter(|c| c.status == status).count()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
