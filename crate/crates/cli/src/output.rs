//! CSV and JSON writers.
//!
//! Every CSV starts with `# key=value` comment lines carrying run metadata,
//! then a header row. Floats use the shortest representation that
//! round-trips, so reruns compare byte for byte.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use faer::Mat;
use serde::Serialize;

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            ..Self::default()
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// A dense matrix with the row and column coordinates as first column and header.
    pub fn matrix(name: impl Into<String>, axis: &[f64], m: &Mat<f64>) -> Self {
        let mut columns = vec!["coord".to_string()];
        columns.extend(axis.iter().map(|v| v.to_string()));
        let rows = (0..m.nrows())
            .map(|i| {
                let mut r = vec![axis[i]];
                r.extend((0..m.ncols()).map(|j| m[(i, j)]));
                r
            })
            .collect();
        Self {
            name: name.into(),
            meta: Vec::new(),
            columns,
            rows,
        }
    }

    /// Long format (x1, x2, value) of a square field on every `stride`-th point.
    pub fn triplets(name: impl Into<String>, axis: &[f64], m: &Mat<f64>, stride: usize) -> Self {
        let mut t = Table::new(name, vec!["x1".into(), "x2".into(), "value".into()]);
        let stride = stride.max(1);
        for i in (0..m.nrows()).step_by(stride) {
            for j in (0..m.ncols()).step_by(stride) {
                t.push(vec![axis[i], axis[j], m[(i, j)]]);
            }
        }
        t.meta("stride", stride)
    }
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".into()
    }
}

pub fn write_table(dir: &Path, table: &Table, run_meta: &[(String, String)]) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", table.name));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for (k, v) in run_meta.iter().chain(&table.meta) {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| fmt(v)))?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
