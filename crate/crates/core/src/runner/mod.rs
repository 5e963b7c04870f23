//! End-to-end evaluation: prompt rendering, generation through a pluggable
//! client, scoring and reporting.
//!
//! A run directory holds three files:
//!
//! * `records.jsonl`: one scored record per example, sorted by example id;
//! * `report.jsonl`: the aggregated metric rows;
//! * `manifest.json`: config, client identity and timestamps.
//!
//! The CLI also writes `report.txt` with the human-readable tables.
//!
//! The first two are byte-deterministic for mock clients; timestamps only
//! appear in the manifest.

mod client;
mod eval;
mod http;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{ClientError, GenerationClient, GenerationRequest, GoldenClient, ScriptedClient};
pub use eval::{
    evaluate, prompt_hash, report_from_records, EvalConfig, EvalError, ExampleRecord, RunManifest,
    RunResult, TaskKind,
};
pub use http::{GenerateRequestBody, GenerateResponseBody, HttpClient, HttpConfig, TOKEN_ENV};

use crate::apimetrics::{render_tables, MetricReport, ReportRow};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const REPORT_FILE: &str = "report.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TABLES_FILE: &str = "report.txt";

#[derive(Debug, Error)]
pub enum RunIoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Rows,
    Tables,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rows" => Ok(Self::Rows),
            "tables" => Ok(Self::Tables),
            other => Err(format!("unknown report format `{other}` (rows|tables)")),
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), RunIoError> {
    std::fs::write(path, contents).map_err(|source| RunIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read(path: &Path) -> Result<String, RunIoError> {
    std::fs::read_to_string(path).map_err(|source| RunIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn from_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<Vec<T>, RunIoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RunIoError::Format {
                path: path.to_path_buf(),
                detail: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

/// Write records, report rows and manifest into `dir`.
pub fn write_run(dir: &Path, result: &RunResult) -> Result<(), RunIoError> {
    std::fs::create_dir_all(dir).map_err(|source| RunIoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(&dir.join(RECORDS_FILE), &to_jsonl(&result.records))?;
    write(&dir.join(REPORT_FILE), &result.report.to_jsonl())?;
    let manifest = serde_json::to_string_pretty(&result.manifest).expect("manifest serializes");
    write(&dir.join(MANIFEST_FILE), &(manifest + "\n"))
}

pub fn read_run(dir: &Path) -> Result<RunResult, RunIoError> {
    let records_path = dir.join(RECORDS_FILE);
    let records = from_jsonl(&records_path, &read(&records_path)?)?;
    let report_path = dir.join(REPORT_FILE);
    let rows: Vec<ReportRow> = from_jsonl(&report_path, &read(&report_path)?)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = serde_json::from_str(&read(&manifest_path)?).map_err(|e| RunIoError::Format {
        path: manifest_path.clone(),
        detail: e.to_string(),
    })?;
    Ok(RunResult {
        records,
        report: MetricReport { rows },
        manifest,
    })
}

/// Render the report of a run in the requested format.
pub fn format_report(result: &RunResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Rows => result.report.to_jsonl(),
        ReportFormat::Tables => render_tables(&result.report, &result.manifest.client),
    }
}

/// Write the report file for `format` into `dir` and return its path.
pub fn generate_report(result: &RunResult, format: ReportFormat, dir: &Path) -> Result<PathBuf, RunIoError> {
    let path = dir.join(match format {
        ReportFormat::Rows => REPORT_FILE,
        ReportFormat::Tables => TABLES_FILE,
    });
    write(&path, &format_report(result, format))?;
    Ok(path)
}
