use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::verify::CheckStats;
use crate::error::{Error, Result};
use crate::worm_mc::RNG_NAME;

pub const RECORDS_FILE: &str = "records.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.json";
/// Present only when the run stopped early.
pub const FAILURE_MARKER: &str = "FAILED";

pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub kind: String,
    pub observable: String,
    pub value: f64,
    pub error: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub input_hash: String,
}

impl ResultRecord {
    /// Bitwise equality of every field; NaN values match each other.
    pub fn identical(&self, other: &ResultRecord) -> bool {
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        let same_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => same(a, b),
            (None, None) => true,
            _ => false,
        };
        self.experiment_id == other.experiment_id
            && self.kind == other.kind
            && self.observable == other.observable
            && same(self.value, other.value)
            && same_opt(self.error, other.error)
            && self.l == other.l
            && same_opt(self.beta, other.beta)
            && self.seed == other.seed
            && self.input_hash == other.input_hash
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    pub by_check: BTreeMap<String, CheckStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment_id: String,
    pub kind: String,
    pub input_hash: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub records: usize,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<u64>,
    pub lambda_convention: String,
    pub rng: String,
    pub software_version: String,
    pub elapsed_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<VerificationSummary>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, records: usize, failure: Option<String>, elapsed_secs: f64) -> Self {
        let kind = cfg.kind;
        let lambda_convention = match (kind.is_monte_carlo(), cfg.block_side) {
            (false, _) => "none".to_string(),
            (true, None) => "whole torus".to_string(),
            (true, Some(s)) => format!("centred block of side {s}"),
        };
        Manifest {
            experiment_id: cfg.experiment_id(),
            kind: kind.name().into(),
            input_hash: cfg.input_hash(),
            status: if failure.is_some() { RunStatus::Failed } else { RunStatus::Complete },
            failure,
            records,
            seeds: cfg.seeds.clone(),
            corpus_seed: matches!(kind, super::ExperimentKind::VerifyIdentities | super::ExperimentKind::VerifySwitching)
                .then_some(cfg.corpus.seed),
            sweeps: kind.is_monte_carlo().then_some(cfg.budget.sweeps),
            lambda_convention,
            rng: RNG_NAME.into(),
            software_version: SOFTWARE_VERSION.into(),
            elapsed_secs,
            summary: None,
        }
    }
}

pub fn write_records(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record(["experiment_id", "kind", "observable", "value", "error", "L", "beta", "seed", "input_hash"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(Error::from)
}
