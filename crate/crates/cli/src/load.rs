//! Scenario ingestion: file or bundled name, dotted-key overrides, then validation.

use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;
use zsource_core::sim::bundled_json;
use zsource_core::F64::Scenario;

use crate::Invalid;

/// Options shared by every subcommand that reads a scenario.
#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub scenario: String,
    pub overrides: Vec<String>,
    pub lossless: bool,
    pub dt: Option<f64>,
}

fn read_source(source: &str) -> Result<String> {
    let path = Path::new(source);
    if path.exists() {
        return std::fs::read_to_string(path).with_context(|| format!("reading {source}"));
    }
    match bundled_json(source) {
        Some(text) => Ok(text.to_owned()),
        None => Err(Invalid(format!(
            "scenario '{source}' is neither a file nor a bundled name ({})",
            Scenario::bundled_names().collect::<Vec<_>>().join(", ")
        ))
        .into()),
    }
}

/// Parses the right-hand side of `key=value` as JSON, falling back to a string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()))
}

/// Applies one `a.b.c=value` override; every path segment must already exist.
pub fn apply_override(doc: &mut Value, assignment: &str) -> std::result::Result<(), Invalid> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Invalid(format!("override '{assignment}' is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Invalid(format!("override '{assignment}' has an empty key")));
    }
    let mut node = doc;
    for seg in key.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(items) => seg.parse::<usize>().ok().and_then(move |i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Invalid(format!("override key '{key}' does not exist (at '{seg}')")))?;
    }
    *node = parse_value(raw.trim());
    Ok(())
}

pub fn load(opts: &LoadOptions) -> Result<Scenario> {
    let text = read_source(&opts.scenario)?;
    let raw: Scenario = serde_json::from_str(&text)
        .map_err(|e| Invalid(format!("{}: {e}", opts.scenario)))?;
    let mut doc = serde_json::to_value(&raw)?;
    for o in &opts.overrides {
        apply_override(&mut doc, o)?;
    }
    let mut sc: Scenario = serde_json::from_value(doc).map_err(|e| Invalid(format!("after overrides: {e}")))?;
    if opts.lossless {
        sc.params.make_lossless();
    }
    if let Some(dt) = opts.dt {
        sc.dt_physics = dt;
    }
    sc.validate()?;
    Ok(sc)
}
