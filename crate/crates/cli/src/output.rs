//! CSV and JSON artifacts.

use std::path::Path;

use fsskit::Complex64;
use serde::Serialize;

use crate::Failure;

/// Rows of one CSV file, written in insertion order.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// Columns named `foo*` with a trailing `*` are complex and expand to `foo_re`, `foo_im`.
    pub fn new(columns: &[&str]) -> Self {
        let mut header = Vec::new();
        for c in columns {
            match c.strip_suffix('*') {
                Some(base) => {
                    header.push(format!("{base}_re"));
                    header.push(format!("{base}_im"));
                }
                None => header.push(c.to_string()),
            }
        }
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        debug_assert_eq!(row.0.len(), self.header.len(), "row width");
        self.rows.push(row.0);
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builder for one CSV row.
#[derive(Default)]
pub struct Row(Vec<String>);

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn f(mut self, v: f64) -> Self {
        // shortest representation that round-trips
        self.0.push(format!("{v:?}"));
        self
    }

    pub fn c(self, v: Complex64) -> Self {
        self.f(v.re).f(v.im)
    }

    pub fn i(mut self, v: usize) -> Self {
        self.0.push(v.to_string());
        self
    }

    pub fn s(mut self, v: impl Into<String>) -> Self {
        self.0.push(v.into());
        self
    }

    pub fn b(self, v: bool) -> Self {
        self.s(if v { "true" } else { "false" })
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), Failure> {
    // serde_json::Value maps are BTreeMaps, so key order is stable
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
