//! Run reports: a deterministic JSON document, a flat CSV of per-pair or
//! per-trial values, and a separate timings file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::LabResult;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    /// The result this assertion checks.
    pub anchor: String,
    pub passed: bool,
    pub observed: f64,
    pub threshold: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub results: serde_json::Value,
    pub assertions: Vec<Assertion>,
    /// All budgeted searches finished.
    pub certified: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Stage durations in seconds, kept out of the report so reruns compare equal.
#[derive(Debug, Default)]
pub struct Timings {
    stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push((stage.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn record(&mut self, stage: &str, seconds: f64) {
        self.stages.push((stage.to_string(), seconds));
    }

    pub fn get(&self, stage: &str) -> Option<f64> {
        self.stages.iter().find(|(s, _)| s == stage).map(|(_, t)| *t)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.stages
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::json!(v)))
                .collect(),
        )
    }
}

pub struct Outcome {
    pub report: RunReport,
    pub table: CsvTable,
    pub timings: Timings,
}

pub struct WrittenFiles {
    pub report: PathBuf,
    pub table: PathBuf,
    pub timings: PathBuf,
}

impl Outcome {
    pub fn write(&self, dir: &Path) -> LabResult<WrittenFiles> {
        std::fs::create_dir_all(dir)?;
        let stem = &self.report.command;
        let files = WrittenFiles {
            report: dir.join(format!("{stem}_report.json")),
            table: dir.join(format!("{stem}.csv")),
            timings: dir.join(format!("{stem}_timings.json")),
        };
        let mut json = serde_json::to_string_pretty(&self.report)?;
        json.push('\n');
        std::fs::write(&files.report, json)?;

        let mut writer = csv::Writer::from_path(&files.table)?;
        writer.write_record(&self.table.header)?;
        for row in &self.table.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;

        let mut timings = serde_json::to_string_pretty(&self.timings.to_json())?;
        timings.push('\n');
        std::fs::write(&files.timings, timings)?;
        Ok(files)
    }
}

/// Shortest round-trip formatting, so CSV values reproduce bit for bit.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
