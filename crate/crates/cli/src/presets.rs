//! Shipped experiment configs.
//!
//! Presets are ordinary TOML files under `presets/`, compiled in so the binary
//! is self-contained; `becprobe presets --dump NAME` prints one for editing.

use toml::Value;

use crate::load::parse_value;
use crate::CliError;

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
    ("fig8-j1", include_str!("../presets/fig8-j1.toml")),
    ("fig8-j2", include_str!("../presets/fig8-j2.toml")),
    ("fig8-j3", include_str!("../presets/fig8-j3.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<Value, CliError> {
    let text = preset_text(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("unknown preset '{name}'; known: {}", names.join(", ")))
    })?;
    parse_value(text, false)
}

/// (name, kind, notes) for each preset.
pub fn table() -> Vec<(String, String, String)> {
    PRESETS
        .iter()
        .map(|(name, text)| {
            let v = parse_value(text, false).expect("shipped presets parse");
            let get = |k: &str| v.get(k).and_then(Value::as_str).unwrap_or("").to_string();
            (name.to_string(), get("kind"), get("notes"))
        })
        .collect()
}
