//! Summary tables, JSONL records and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::params::Params;

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
    #[default]
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Jsonl
    }

    fn jsonl(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// What a command produced.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub summary: Table,
    /// One JSON object per line; per-sample records carry `master_seed` and
    /// `sample`.
    pub records: Vec<Value>,
    /// Overall verdict for commands that check something.
    pub passed: Option<bool>,
}

impl Report {
    pub fn jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Params,
    pub master_seed: u64,
    pub workers: usize,
    pub format: Format,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// SHA-256 of each output file, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the report to `dir` as `<command>.csv`, `<command>.jsonl` and
/// `manifest.json`; returns the written paths.
pub fn write_report(dir: &Path, report: &Report, format: Format, mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let mut put = |name: String, body: &[u8]| -> Result<()> {
        let path = dir.join(&name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        manifest.outputs.insert(name, sha256_hex(body));
        files.push(path);
        Ok(())
    };
    if format.csv() {
        put(format!("{}.csv", manifest.command), report.summary.to_csv()?.as_bytes())?;
    }
    if format.jsonl() {
        put(format!("{}.jsonl", manifest.command), report.jsonl()?.as_bytes())?;
    }
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    files.push(path);
    Ok(files)
}

/// Prints the report to stdout: the CSV summary, then the JSONL records.
pub fn print_report(report: &Report, format: Format) -> Result<()> {
    let mut out = std::io::stdout().lock();
    if format.csv() {
        out.write_all(report.summary.to_csv()?.as_bytes())?;
    }
    if format.jsonl() {
        out.write_all(report.jsonl()?.as_bytes())?;
    }
    Ok(())
}

/// The JSON error record printed on failure.
pub fn error_record(command: Option<&str>, err: &anyhow::Error) -> Value {
    let message = format!("{err:#}");
    let kind = if message.starts_with("missing key") {
        "missing_key"
    } else if message.starts_with("invalid value") || message.starts_with("config:") {
        "invalid_value"
    } else {
        "runtime"
    };
    serde_json::json!({ "error": { "kind": kind, "command": command, "message": message } })
}
