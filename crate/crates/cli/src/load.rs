//! Reading configs, applying `key=value` overrides and expanding scans.

use std::path::Path;

use toml::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Parses a TOML config, or a JSON manifest through its `config` field.
pub fn read_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_value(&text, path.extension().and_then(|e| e.to_str()) == Some("json"))
}

pub fn parse_value(text: &str, json: bool) -> Result<Value, CliError> {
    if json {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let cfg = v.get("config").cloned().unwrap_or(v);
        Value::try_from(strip_nulls(cfg)).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    } else {
        text.parse::<toml::Table>()
            .map(Value::Table)
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

fn strip_nulls(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value as J;
    match v {
        J::Object(m) => J::Object(m.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k, strip_nulls(v))).collect()),
        J::Array(a) => J::Array(a.into_iter().map(strip_nulls).collect()),
        other => other,
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back to a string.
pub fn parse_scalar(text: &str) -> Value {
    let doc = format!("v = {text}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.into())),
        Err(_) => Value::String(text.into()),
    }
}

/// Sets a dotted key, creating intermediate tables.
pub fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key '{key}'")));
    }
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("'{}' is not a table", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        cur = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(toml::Table::new()));
    }
    unreachable!("key has at least one part")
}

pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{spec}' is not key=value")))?;
    set_path(root, key.trim(), parse_scalar(value.trim()))
}

pub fn to_config(value: &Value) -> Result<ExperimentConfig, CliError> {
    value
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))
}

/// One config per scan value, labelled `key=value`; a single config when there is no scan.
pub fn expand(value: &Value) -> Result<Vec<(Option<String>, ExperimentConfig, Value)>, CliError> {
    let base = to_config(value)?;
    let Some(scan) = base.scan.clone() else {
        return Ok(vec![(None, base, value.clone())]);
    };
    if scan.values.is_empty() {
        return Err(CliError::Config("scan.values is empty".into()));
    }
    let mut stripped = value.clone();
    if let Some(t) = stripped.as_table_mut() {
        t.remove("scan");
    }
    scan.values
        .iter()
        .map(|v| {
            let mut point = stripped.clone();
            set_path(&mut point, &scan.key, v.clone())?;
            let cfg = to_config(&point)?;
            Ok((Some(format!("{}={}", scan.key, v)), cfg, point))
        })
        .collect()
}
