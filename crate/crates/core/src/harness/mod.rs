//! Experiment harness: configuration, verification suites, record files and
//! bit-exact replay.
//!
//! A run writes `<out>/<experiment_id>/` containing `config.toml`,
//! `records.csv`, `manifest.json`, `summary.json`, optional SVG charts, and a
//! `FAILED` marker when it stopped early.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod records;
pub mod svg;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{execute, Outcome};
pub use records::{Manifest, ResultRecord, RunStatus, VerificationSummary};

use crate::error::{Error, Result};
use records::{read_records, write_json, write_records, CONFIG_FILE, FAILURE_MARKER, MANIFEST_FILE, RECORDS_FILE, SUMMARY_FILE};

/// What a finished run left on disk.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunReport {
    /// True when the run completed and every verification check passed.
    pub fn passed(&self) -> bool {
        self.manifest.status == RunStatus::Complete && self.manifest.summary.as_ref().is_none_or(|s| s.passed)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment_id: &'a str,
    status: RunStatus,
    records: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<&'a VerificationSummary>,
}

/// Validates `cfg`, runs it and writes the result directory under
/// `cfg.out` or `out_root`. Nothing is written when validation fails.
pub fn run(cfg: &ExperimentConfig, out_root: &Path) -> Result<RunReport> {
    cfg.validate()?;
    let root = cfg.out.clone().unwrap_or_else(|| out_root.to_path_buf());
    let dir = root.join(cfg.experiment_id());
    let start = Instant::now();
    let outcome = execute(cfg);
    let elapsed = start.elapsed().as_secs_f64();
    write_outcome(cfg, &dir, &outcome, elapsed)
}

fn write_outcome(cfg: &ExperimentConfig, dir: &Path, outcome: &Outcome, elapsed: f64) -> Result<RunReport> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_toml()?)?;
    write_records(&dir.join(RECORDS_FILE), &outcome.records)?;
    let mut manifest = Manifest::new(cfg, outcome.records.len(), outcome.failure.clone(), elapsed);
    manifest.summary = outcome.summary.clone();
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    let summary = Summary {
        experiment_id: &manifest.experiment_id,
        status: manifest.status,
        records: manifest.records,
        failure: manifest.failure.as_deref(),
        verification: manifest.summary.as_ref(),
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    let marker = dir.join(FAILURE_MARKER);
    match &outcome.failure {
        Some(msg) => fs::write(&marker, format!("{msg}\n"))?,
        None if marker.exists() => fs::remove_file(&marker)?,
        None => {}
    }
    if cfg.charts {
        for c in &outcome.charts {
            fs::write(dir.join(&c.file), c.to_svg())?;
        }
    }
    Ok(RunReport { dir: dir.to_path_buf(), manifest })
}

/// Re-runs the experiment stored in `dir` and compares every record bit for
/// bit. Returns the number of records compared.
pub fn replay(dir: &Path) -> Result<usize> {
    let cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE), None)?;
    cfg.validate()?;
    let stored = read_records(&dir.join(RECORDS_FILE))?;
    let fresh = execute(&cfg).records;
    compare_records(&stored, &fresh)?;
    Ok(stored.len())
}

/// First divergence between two record streams, as a `ReplayMismatch`.
pub fn compare_records(stored: &[ResultRecord], fresh: &[ResultRecord]) -> Result<()> {
    for (i, (a, b)) in stored.iter().zip(fresh).enumerate() {
        if !a.identical(b) {
            return Err(Error::ReplayMismatch(format!(
                "record {i} ({}): stored value {:e} error {:?}, replay value {:e} error {:?}",
                a.observable, a.value, a.error, b.value, b.error
            )));
        }
    }
    if stored.len() != fresh.len() {
        return Err(Error::ReplayMismatch(format!(
            "record count differs: stored {}, replay {}",
            stored.len(),
            fresh.len()
        )));
    }
    Ok(())
}
