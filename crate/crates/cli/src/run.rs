//! Runs a (possibly scanned) config and writes tables plus a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value as Json;
use toml::Value;

use crate::experiment::{execute_cached, PhysicsCache, RunResult};
use crate::load::expand;
use crate::output::{write_json, write_table, Table};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub threads: usize,
    pub command: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub name: String,
    pub kind: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub command: Vec<String>,
    pub runtime_seconds: f64,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    pub summary: Json,
    /// The fully resolved config; feeding this file back to `run` repeats the run.
    pub config: Json,
}

pub struct RunReport {
    pub manifest: Manifest,
    pub results: Vec<(Option<String>, RunResult)>,
}

fn scan_number(v: &Value, i: usize) -> f64 {
    match v {
        Value::Float(f) => *f,
        Value::Integer(n) => *n as f64,
        _ => i as f64,
    }
}

/// Stacks same-shaped tables from all scan points with the scan value in front.
fn aggregate(key: &str, values: &[Value], per_point: &[Vec<Table>]) -> Vec<Table> {
    let column = key.rsplit('.').next().unwrap_or(key).to_string();
    let mut out = Vec::new();
    for t0 in &per_point[0] {
        let same: Option<Vec<&Table>> = per_point
            .iter()
            .map(|ts| ts.iter().find(|t| t.name == t0.name && t.columns == t0.columns))
            .collect();
        let Some(same) = same else { continue };
        // dense matrices are left per point
        if t0.columns.first().map(String::as_str) == Some("coord") {
            continue;
        }
        let mut cols = vec![column.clone()];
        cols.extend(t0.columns.iter().cloned());
        let mut agg = Table::new(format!("scan_{}", t0.name), cols).meta("scan_key", key);
        for (i, t) in same.iter().enumerate() {
            let v = scan_number(&values[i], i);
            for r in &t.rows {
                let mut row = vec![v];
                row.extend(r);
                agg.push(row);
            }
        }
        out.push(agg);
    }
    out
}

fn safe_dir(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '_' })
        .collect()
}

pub fn execute_value(value: &Value) -> Result<Vec<(Option<String>, RunResult)>, CliError> {
    let points = expand(value)?;
    let mut cache = PhysicsCache::default();
    let mut out = Vec::new();
    for (label, cfg, _) in points {
        out.push((label, execute_cached(&cfg, &mut cache)?));
    }
    Ok(out)
}

pub fn run(value: &Value, opts: &RunOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let base = crate::load::to_config(value)?;
    let results = execute_value(value)?;
    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::Io(e.into()))?;

    let meta = |label: &Option<String>| {
        let mut m = vec![
            ("experiment".to_string(), base.name.clone()),
            ("kind".to_string(), format!("{:?}", base.kind).to_lowercase()),
            ("seed".to_string(), base.seed.to_string()),
            ("version".to_string(), VERSION.to_string()),
        ];
        if let Some(l) = label {
            m.push(("scan".to_string(), l.clone()));
        }
        m
    };
    let mut outputs = Vec::new();
    let mut warnings = Vec::new();
    let mut summaries = Vec::new();
    let mut per_point = Vec::new();
    for (label, res) in &results {
        let dir = match label {
            Some(l) => opts.out.join(safe_dir(l)),
            None => opts.out.clone(),
        };
        let tables = res.outcome.tables();
        for t in &tables {
            let path = write_table(&dir, t, &meta(label)).map_err(CliError::Io)?;
            outputs.push(relative(&path, &opts.out));
        }
        for w in &res.warnings {
            let w = match label {
                Some(l) => format!("[{l}] {w}"),
                None => w.clone(),
            };
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        let mut s = res.outcome.summary();
        if let Some(l) = label {
            s["scan"] = Json::from(l.clone());
        }
        summaries.push(s);
        per_point.push(tables);
    }
    if let Some(scan) = &base.scan {
        for t in aggregate(&scan.key, &scan.values, &per_point) {
            let path = write_table(&opts.out, &t, &meta(&None)).map_err(CliError::Io)?;
            outputs.push(relative(&path, &opts.out));
        }
    }
    let mut resolved = base.clone();
    resolved.out = Some(opts.out.display().to_string());
    let manifest = Manifest {
        name: base.name.clone(),
        kind: format!("{:?}", base.kind).to_lowercase(),
        version: VERSION.to_string(),
        seed: base.seed,
        threads: opts.threads,
        command: opts.command.clone(),
        runtime_seconds: start.elapsed().as_secs_f64(),
        warnings,
        outputs,
        summary: if summaries.len() == 1 {
            summaries.pop().unwrap()
        } else {
            Json::from(summaries)
        },
        config: serde_json::to_value(&resolved).map_err(|e| CliError::Io(e.into()))?,
    };
    write_json(&opts.out.join("manifest.json"), &manifest).map_err(CliError::Io)?;
    Ok(RunReport { manifest, results })
}

fn relative(path: &Path, root: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).display().to_string()
}
