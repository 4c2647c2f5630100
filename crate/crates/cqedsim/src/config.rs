//! Flat key = value configuration files: one key per line, `#` comments,
//! unknown keys rejected. Command-line `--set key=value` pairs override
//! file values.

use std::collections::{BTreeMap, BTreeSet};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Exchange,
    RamanGate,
    RamanSweep,
    AdiabaticTransfer,
    AdiabaticSweep,
    DispersiveHeating,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "exchange" => Ok(Self::Exchange),
            "raman-gate" => Ok(Self::RamanGate),
            "raman-sweep" => Ok(Self::RamanSweep),
            "adiabatic-transfer" => Ok(Self::AdiabaticTransfer),
            "adiabatic-sweep" => Ok(Self::AdiabaticSweep),
            "dispersive-heating" => Ok(Self::DispersiveHeating),
            other => Err(CliError::Config(format!(
                "unknown experiment '{other}' (expected exchange | raman-gate | raman-sweep \
                 | adiabatic-transfer | adiabatic-sweep | dispersive-heating)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exchange => "exchange",
            Self::RamanGate => "raman-gate",
            Self::RamanSweep => "raman-sweep",
            Self::AdiabaticTransfer => "adiabatic-transfer",
            Self::AdiabaticSweep => "adiabatic-sweep",
            Self::DispersiveHeating => "dispersive-heating",
        }
    }
}

/// Parsed key = value map plus consumption tracking so leftovers can be
/// rejected.
#[derive(Debug, Clone)]
pub struct RawConfig {
    map: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", lineno + 1)));
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
        }
        Ok(Self { map, used: BTreeSet::new() })
    }

    /// Apply a command-line `key=value` override.
    pub fn set(&mut self, assignment: &str) -> CliResult<()> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(CliError::Config(format!(
                "--set expects key=value, got '{assignment}'"
            )));
        };
        self.map.insert(key.trim().to_string(), value.trim().to_string());
        Ok(())
    }

    /// Every key/value pair, for the run summary.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.map
    }

    pub fn string(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.map.get(key).cloned()
    }

    pub fn string_or(&mut self, key: &str, default: &str) -> String {
        self.string(key).unwrap_or_else(|| default.to_string())
    }

    pub fn f64(&mut self, key: &str) -> CliResult<Option<f64>> {
        self.used.insert(key.to_string());
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("key '{key}': '{v}' is not a number"))),
        }
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> CliResult<usize> {
        self.used.insert(key.to_string());
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("key '{key}': '{v}' is not an integer"))),
        }
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> CliResult<bool> {
        self.used.insert(key.to_string());
        match self.map.get(key).map(|s| s.as_str()) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(CliError::Config(format!("key '{key}': '{v}' is not a bool"))),
        }
    }

    /// Comma-separated list of reals.
    pub fn f64_list(&mut self, key: &str) -> CliResult<Option<Vec<f64>>> {
        self.used.insert(key.to_string());
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    out.push(part.parse::<f64>().map_err(|_| {
                        CliError::Config(format!("key '{key}': '{part}' is not a number"))
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    /// Reject any keys never consumed by the experiment.
    pub fn finish(&self) -> CliResult<()> {
        let unknown: Vec<&String> =
            self.map.keys().filter(|k| !self.used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown key(s): {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    }
}
