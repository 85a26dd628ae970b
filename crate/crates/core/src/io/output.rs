use std::path::Path;

use serde::Serialize;

use super::run::{Diagnostics, ResultRecord};
use super::IoError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct TableEntry<'a> {
    name: &'a str,
    file: String,
    columns: &'a [String],
    rows: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a serde_json::Value,
    inputs_digest: &'a str,
    tables: Vec<TableEntry<'a>>,
    diagnostics: &'a Diagnostics,
}

/// Writes one `<table>.csv` per table and a `manifest.json` into `dir`.
///
/// The output depends only on the record's content, never on wall time.
pub fn write_results(record: &ResultRecord, dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut entries = Vec::with_capacity(record.tables.len());
    for table in &record.tables {
        let file = format!("{}.csv", table.name);
        let path = dir.join(&file);
        let csv_err = |e: csv::Error| IoError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(&table.columns).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(ToString::to_string)).map_err(csv_err)?;
        }
        w.flush().map_err(|e| IoError::io(&path, e))?;
        entries.push(TableEntry {
            name: &table.name,
            file,
            columns: &table.columns,
            rows: table.rows.len(),
        });
    }
    let manifest = Manifest {
        command: &record.command,
        inputs_digest: &record.inputs_digest,
        tables: entries,
        diagnostics: &record.diagnostics,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| IoError::io(&path, e))
}
