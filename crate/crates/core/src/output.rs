//! CSV tables and the JSON run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::scenario::{ScenarioResult, Table};

/// Scientific notation with 15 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.14e}")
}

pub fn write_table<W: Write>(table: &Table, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| format_value(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn manifest_json(result: &ScenarioResult) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&result.manifest)?;
    text.push('\n');
    Ok(text)
}

/// Write every table as `<name>.csv` and the manifest as
/// `<scenario>_manifest.json`. Returns the paths in write order.
pub fn write_result(result: &ScenarioResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(result.tables.len() + 1);
    for table in &result.tables {
        let path = dir.join(format!("{}.csv", table.name));
        write_table(table, fs::File::create(&path)?)?;
        paths.push(path);
    }
    let path = dir.join(format!("{}_manifest.json", result.kind.name()));
    fs::write(&path, manifest_json(result)?)?;
    paths.push(path);
    Ok(paths)
}
