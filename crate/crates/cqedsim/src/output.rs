//! CSV and JSON writers. The CSV bytes are a deterministic function of the
//! config: fixed column order, row order fixed by the input point order,
//! floats printed with Rust's shortest round-trip formatting.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde_json::{json, Map, Value};

use crate::experiments::ExperimentOutput;
use crate::{CliError, CliResult};

pub fn write_csv(path: &Path, out: &ExperimentOutput) -> CliResult<()> {
    let mut text = String::new();
    text.push_str(&out.header.join(","));
    text.push('\n');
    for row in &out.rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn write_summary(
    path: &Path,
    experiment: &str,
    parameters: Map<String, Value>,
    out: &ExperimentOutput,
    wall: Duration,
) -> CliResult<()> {
    let failures: Vec<Value> = out
        .failures
        .iter()
        .map(|(point, error)| json!({ "point": point, "error": error }))
        .collect();
    let doc = json!({
        "experiment": experiment,
        "version": env!("CARGO_PKG_VERSION"),
        "parameters": Value::Object(parameters),
        "rows_written": out.rows.len(),
        "failures": failures,
        "results": out.summary,
        "wall_time_s": wall.as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Config(format!("summary serialization: {e}")))?;
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}
