use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Fixed-precision float cell.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(name: &str, header: &[S]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Everything a scenario run emits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultBundle {
    pub scenario: String,
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
    /// Per-device failures that were skipped; non-empty means a partial run.
    pub failures: Vec<String>,
    /// Line-delimited record files written next to the tables.
    pub records: Vec<RecordFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordFile {
    pub name: String,
    pub text: String,
}

impl ResultBundle {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<name>.csv` per table and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv()?).map_err(|e| Error::io(&path, e))?;
        }
        for r in &self.records {
            let path = dir.join(&r.name);
            fs::write(&path, &r.text).map_err(|e| Error::io(&path, e))?;
        }
        let summary = serde_json::json!({
            "scenario": self.scenario,
            "summary": self.summary,
            "failures": self.failures,
        });
        let path = dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
