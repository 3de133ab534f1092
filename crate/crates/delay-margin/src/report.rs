//! Report output: atomic JSON/CSV writers.
//!
//! Reports are JSON, tables are CSV; both are written atomically
//! (temp file + rename) and deterministically (`serde_json` objects
//! serialize with sorted keys, floats through the shortest-round-trip
//! formatter), so identical configuration and seed produce
//! byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Write `content` to `path`, creating parent directories, via a
/// temporary file in the same directory followed by a rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    tmp.set_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    write_atomic(path, &body)
}

/// Assemble a CSV document from a header and rows.
pub fn csv_document(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

/// Fixed-precision float for table cells (4 decimals, trailing zeros
/// trimmed: 1.5000 -> 1.5, 1.0909 stays).
pub fn trim4(x: f64) -> String {
    let s = format!("{x:.4}");
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}
