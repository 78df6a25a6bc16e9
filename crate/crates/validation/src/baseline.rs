//! Frozen regression curves stored as CSV under `baselines/`.
//!
//! A missing file, or `BECPROBE_BLESS=1`, writes the current values instead
//! of comparing against them.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};

pub fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("baselines").join(format!("{name}.csv"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Columns {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Columns {
    pub fn new(names: &[String]) -> Self {
        Self {
            names: names.to_vec(),
            rows: Vec::new(),
        }
    }
}

pub fn write(name: &str, c: &Columns) -> Result<()> {
    let p = path(name);
    std::fs::create_dir_all(p.parent().unwrap())?;
    let mut w = csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
    w.write_record(&c.names)?;
    for r in &c.rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read(name: &str) -> Result<Columns> {
    let p = path(name);
    let mut r = csv::Reader::from_path(&p).with_context(|| format!("reading {}", p.display()))?;
    let names = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(|s| s.parse::<f64>()).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(Columns { names, rows })
}

#[derive(Clone, Debug)]
pub enum Comparison {
    Written,
    Matched { max_diff: f64 },
}

/// Compares against the stored curves with an absolute tolerance.
pub fn check(name: &str, current: &Columns, tol: f64) -> Result<Comparison> {
    let bless = std::env::var("BECPROBE_BLESS").is_ok_and(|v| v == "1");
    if bless || !path(name).exists() {
        write(name, current)?;
        return Ok(Comparison::Written);
    }
    let stored = read(name)?;
    if stored.names != current.names || stored.rows.len() != current.rows.len() {
        bail!(
            "{name}: shape changed ({} x {} stored, {} x {} now)",
            stored.rows.len(),
            stored.names.len(),
            current.rows.len(),
            current.names.len()
        );
    }
    let mut max_diff = 0.0f64;
    for (a, b) in stored.rows.iter().zip(&current.rows) {
        for (x, y) in a.iter().zip(b) {
            max_diff = max_diff.max((x - y).abs());
        }
    }
    if max_diff > tol {
        bail!("{name}: differs from the frozen curves by {max_diff:.3e} (tolerance {tol:.0e})");
    }
    Ok(Comparison::Matched { max_diff })
}
