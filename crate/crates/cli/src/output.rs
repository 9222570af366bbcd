//! CSV tables and the JSON run manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Column {
            name: name.to_string(),
            unit: unit.to_string(),
            values,
        }
    }
}

/// Equal-length columns written to `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new(name: &str, columns: Vec<Column>) -> Self {
        Table {
            name: name.to_string(),
            columns,
        }
    }
}

/// Locale-independent, round-trip exact decimal text for a finite value.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Renders a table as RFC 4180 CSV with a `name [unit]` header. Refuses
/// NaN and infinities.
pub fn render_csv(table: &Table) -> Result<String, CliError> {
    let rows = table.columns.first().map(|c| c.values.len()).unwrap_or(0);
    if let Some(c) = table.columns.iter().find(|c| c.values.len() != rows) {
        return Err(CliError::Io(format!("{}: column `{}` has {} rows, expected {rows}", table.name, c.name, c.values.len())));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = table.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)).collect();
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in 0..rows {
        let mut record = Vec::with_capacity(table.columns.len());
        for c in &table.columns {
            let v = c.values[r];
            if !v.is_finite() {
                return Err(CliError::Io(format!("{}: non-finite value in `{}` at row {r}", table.name, c.name)));
            }
            record.push(format_float(v));
        }
        w.write_record(&record).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv(dir: &Path, table: &Table) -> Result<String, CliError> {
    let text = render_csv(table)?;
    let file = format!("{}.csv", table.name);
    std::fs::write(dir.join(&file), text).map_err(|e| CliError::Io(format!("{}: {e}", dir.join(&file).display())))?;
    Ok(file)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub artifact_version: String,
    /// SHA-256 of the canonical resolved configuration.
    pub config_hash: String,
    pub master_seed: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    /// Scalar results of the run (fitted lifetimes, distances, ratios).
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// JSON sidecar with sorted keys: `{ "config": …, "manifest": … }`.
pub fn render_sidecar(manifest: &RunManifest, config: &cqed::experiments::ExperimentConfig) -> String {
    let v = serde_json::json!({
        "config": serde_json::to_value(config).expect("configuration serializes"),
        "manifest": serde_json::to_value(manifest).expect("manifest serializes"),
    });
    let mut s = serde_json::to_string_pretty(&v).expect("json value serializes");
    s.push('\n');
    s
}
