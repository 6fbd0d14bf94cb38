use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Method, PipelineConfig};
use crate::enhance::EnhanceParams;
use crate::error::{Error, Result};
use crate::sequence::AlignmentReport;

/// One (rainy frame, pseudo-GT) training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRow {
    pub rainy_path: PathBuf,
    pub pseudo_gt_path: PathBuf,
    pub sequence_id: String,
}

/// Tab-separated `rainy_path<TAB>pseudo_gt_path<TAB>sequence_id`, one row
/// per frame.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairManifest {
    pub rows: Vec<PairRow>,
}

impl PairManifest {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                r.rainy_path.display(),
                r.pseudo_gt_path.display(),
                r.sequence_id
            );
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, line)| {
                let fields: Vec<&str> = line.split('\t').collect();
                match fields.as_slice() {
                    [rainy, gt, id] => Ok(PairRow {
                        rainy_path: PathBuf::from(rainy),
                        pseudo_gt_path: PathBuf::from(gt),
                        sequence_id: id.to_string(),
                    }),
                    _ => Err(Error::Report(format!("pair manifest row {}: expected 3 tab-separated fields", i + 1))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PairManifest { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PairManifest::from_tsv(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub channel: String,
    pub iterations: usize,
    pub final_residual: f64,
    pub rank_estimate: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhanceRecord {
    pub params: EnhanceParams,
    /// Histogram distance at the chosen point, for auto-tuned runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub scene_id: String,
    pub manifest: PathBuf,
    pub status: SequenceStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub method: Method,
    pub frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_gt_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rpca: Vec<SolveRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enhancement: Option<EnhanceRecord>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Contents of `run_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub sequences: Vec<SequenceRecord>,
    pub succeeded: usize,
    pub failed: usize,
}

impl RunReport {
    pub fn all_succeeded(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceComparison {
    pub scene_id: String,
    pub rows: Vec<ComparisonRow>,
}

/// Method × {PSNR, SSIM}, averaged over sequences, with the per-sequence
/// breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub per_sequence: Vec<SequenceComparison>,
}

impl ComparisonTable {
    pub fn row(&self, method: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>9}  {:>7}\n", "method", "PSNR", "SSIM");
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}  {:>9.3}  {:>7.4}", r.method, r.psnr_db, r.ssim);
        }
        out
    }
}
