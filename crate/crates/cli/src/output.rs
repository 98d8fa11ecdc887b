//! CSV and JSON writers.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::manifest::Format;

/// Numeric table with named columns.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// What a task produced.
pub struct Artifact {
    pub table: Option<Table>,
    pub report: Value,
    /// Set when the computation stopped early at a domain boundary; the
    /// output written is partial.
    pub partial: Option<String>,
}

/// Provenance recorded in JSON outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub manifest_sha256: String,
    pub task: &'static str,
    pub chart: String,
    pub seed: u64,
    pub tol: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// 17 significant digits, which round-trips every `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn write_csv(path: &Path, table: &Table) -> CliResult<()> {
    let csv_err = |source| CliError::Csv { path: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_float(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

pub fn write(path: &Path, format: Format, artifact: &Artifact, provenance: &Provenance) -> CliResult<()> {
    match format {
        Format::Csv => {
            let table = artifact.table.as_ref().ok_or_else(|| {
                CliError::Manifest(format!("task `{}` writes JSON reports only; use --format json", provenance.task))
            })?;
            write_csv(path, table)
        }
        Format::Json => {
            let mut doc = json!({
                "provenance": provenance,
                "result": artifact.report,
            });
            if let Some(t) = &artifact.table {
                doc["table"] = serde_json::to_value(t).expect("table serializes");
            }
            if let Some(why) = &artifact.partial {
                doc["partial"] = Value::String(why.clone());
            }
            let text = serde_json::to_string_pretty(&doc).expect("report serializes");
            std::fs::write(path, text + "\n").map_err(|e| CliError::io(path.display(), e))
        }
    }
}

/// Reads a CSV written by [`write`].
pub fn read_csv(path: &Path) -> CliResult<Table> {
    let csv_err = |source| CliError::Csv { path: path.display().to_string(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let columns = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Failed(format!("{}: row {}: {e}", path.display(), rows.len() + 2)))?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_at_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17, "{s}");
        }
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
