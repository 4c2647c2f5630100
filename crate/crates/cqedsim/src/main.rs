use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use cqedsim::config::{ExperimentKind, RawConfig};
use cqedsim::{experiments, output, CliError};

const USAGE: &str = "usage: cqedsim <experiment> --config <path> [--set key=value ...] --out <dir>

experiments:
  exchange             single-atom photon exchange fidelity and heating
  raman-gate           two-atom three-pulse gate entanglement fidelity
  raman-sweep          gate fidelity/heating vs Lamb-Dicke parameter
  adiabatic-transfer   dark-state coherence transfer for one input state
  adiabatic-sweep      transfer fidelity vs Lamb-Dicke parameter
  dispersive-heating   far-detuned optical-potential heating trajectory";

fn main() -> ExitCode {
    match run() {
        Ok(had_failures) => {
            if had_failures {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: invalid config: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<bool, CliError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        eprintln!("{USAGE}");
        return Err(CliError::Config("missing experiment argument".into()));
    }
    let kind = ExperimentKind::parse(&args[0])?;

    let mut config_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut sets: Vec<String> = Vec::new();
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                config_path = Some(PathBuf::from(args.get(i).ok_or_else(|| {
                    CliError::Config("--config needs a path".into())
                })?));
            }
            "--out" => {
                i += 1;
                out_dir = Some(PathBuf::from(args.get(i).ok_or_else(|| {
                    CliError::Config("--out needs a directory".into())
                })?));
            }
            "--set" => {
                i += 1;
                sets.push(
                    args.get(i)
                        .ok_or_else(|| CliError::Config("--set needs key=value".into()))?
                        .clone(),
                );
            }
            other => {
                return Err(CliError::Config(format!("unknown argument '{other}'\n{USAGE}")));
            }
        }
        i += 1;
    }
    let config_path =
        config_path.ok_or_else(|| CliError::Config("missing --config <path>".into()))?;
    let out_dir = out_dir.ok_or_else(|| CliError::Config("missing --out <dir>".into()))?;

    let text = std::fs::read_to_string(&config_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let mut cfg = RawConfig::parse(&text)?;
    for s in &sets {
        cfg.set(s)?;
    }

    let csv_name = cfg.string_or("csv", "results.csv");
    let summary_name = cfg.string_or("summary", "summary.json");

    // run everything before touching the filesystem: invalid configs must
    // not leave output files behind
    let start = Instant::now();
    let result = experiments::run(kind, &mut cfg)?;
    let wall = start.elapsed();

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    output::write_csv(&out_dir.join(csv_name), &result)?;
    output::write_summary(
        &out_dir.join(summary_name),
        kind.name(),
        experiments::parameter_map(&cfg),
        &result,
        wall,
    )?;

    for (point, error) in &result.failures {
        eprintln!("point failed: {point}: {error}");
    }
    Ok(!result.failures.is_empty())
}
