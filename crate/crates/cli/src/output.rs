//! CSV and JSON writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use imfree::linalg::RealMatrix;
use serde::Serialize;

use crate::CliError;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn vec_str(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| num(x)).collect();
    format!("[{}]", parts.join(", "))
}

pub fn matrix_lines(m: &RealMatrix, indent: &str) -> String {
    m.iter()
        .map(|row| format!("{indent}{}\n", vec_str(row)))
        .collect()
}

/// Row-major entry names `{prefix}_{i}{j}`.
pub fn matrix_headers(prefix: &str, n: usize) -> Vec<String> {
    (0..n)
        .flat_map(|i| (0..n).map(move |j| format!("{prefix}_{i}{j}")))
        .collect()
}

pub fn matrix_cells(m: &RealMatrix) -> Vec<String> {
    m.iter().flatten().map(|&v| num(v)).collect()
}

/// CSV table with a leading `schema_version` column.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        let mut header = vec!["schema_version".to_string()];
        header.extend(columns.into_iter().map(Into::into));
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        let mut row = vec![SCHEMA_VERSION.to_string()];
        row.extend(cells);
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| io(format!("{}: {e}", path.display())))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn write_table(&self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        self.write_bytes(name, &table.to_bytes()?)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_vec_pretty(value).map_err(io)?;
        text.push(b'\n');
        self.write_bytes(name, &text)
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.0.join(name);
        let mut f = fs::File::create(&path).map_err(|e| io(format!("{}: {e}", path.display())))?;
        f.write_all(bytes).map_err(io)?;
        Ok(path)
    }
}
