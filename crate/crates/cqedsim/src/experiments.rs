//! Experiment drivers: translate a parsed config into library calls and
//! collect CSV rows plus summary data. Sweep points run in parallel but
//! output rows keep the input order.

use num_complex::Complex64 as C64;
use serde_json::{json, Map, Value};

use cqed::adiabatic::{self, AdiabaticConfig};
use cqed::dispersive::{self, DispersiveConfig};
use cqed::hilbert::ThermalSpec;
use cqed::perturbation;
use cqed::raman::{self, MotionalInit, RamanConfig};

use crate::config::{ExperimentKind, RawConfig};
use crate::{CliError, CliResult};

pub struct ExperimentOutput {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// (point label, error message) for every failed sweep point.
    pub failures: Vec<(String, String)>,
    /// Experiment-specific summary values.
    pub summary: Value,
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

pub fn run(kind: ExperimentKind, cfg: &mut RawConfig) -> CliResult<ExperimentOutput> {
    if let Some(named) = cfg.string("experiment") {
        if named != kind.name() {
            return Err(CliError::Config(format!(
                "config names experiment '{named}' but '{}' was requested",
                kind.name()
            )));
        }
    }
    let out = match kind {
        ExperimentKind::Exchange => run_exchange(cfg)?,
        ExperimentKind::RamanGate => run_raman_gate(cfg)?,
        ExperimentKind::RamanSweep => run_raman_sweep(cfg)?,
        ExperimentKind::AdiabaticTransfer => run_adiabatic_transfer(cfg)?,
        ExperimentKind::AdiabaticSweep => run_adiabatic_sweep(cfg)?,
        ExperimentKind::DispersiveHeating => run_dispersive(cfg)?,
    };
    cfg.finish()?;
    Ok(out)
}

/// Raman config from the shared key set. Exactly one of `omega`, `omega_r`
/// picks the trap parametrization (η is always required).
fn raman_config(cfg: &mut RawConfig) -> CliResult<RamanConfig> {
    let eta = cfg
        .f64("eta")?
        .ok_or_else(|| CliError::Config("missing key 'eta'".into()))?;
    let omega = cfg.f64("omega")?;
    let omega_r = cfg.f64("omega_r")?;
    let mut rc = match (omega, omega_r) {
        (Some(w), None) => RamanConfig::from_eta_omega(eta, w)?,
        (None, Some(wr)) => RamanConfig::from_eta_omega_r(eta, wr)?,
        (None, None) => RamanConfig::from_eta_omega_r(eta, 5e-4)?,
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either 'omega' or 'omega_r', not both".into(),
            ))
        }
    };
    rc.delta = cfg.f64_or("delta", 0.0)?;
    let nbar = cfg.f64_or("nbar", 0.0)?;
    let cutoff = cfg.usize_or("thermal_cutoff", if nbar == 0.0 { 0 } else { 19 })?;
    rc.thermal = ThermalSpec { nbar, cutoff };
    rc.cavity_dim = cfg.usize_or("cavity_dim", 3)?;
    rc.motion_dim = cfg.usize_or("motion_dim", 10)?;
    rc.tol = cfg.f64_or("tol", 1e-9)?;
    rc.validate()?;
    Ok(rc)
}

fn run_exchange(cfg: &mut RawConfig) -> CliResult<ExperimentOutput> {
    let rc = raman_config(cfg)?;
    let init_n = cfg.usize_or("init_n", usize::MAX)?;
    let init = if init_n != usize::MAX {
        MotionalInit::Fock(init_n)
    } else if rc.thermal.nbar == 0.0 {
        MotionalInit::Fock(0)
    } else {
        MotionalInit::Thermal
    };

    let r = raman::simulate_exchange(&rc, init)?;
    let p = rc.exchange_params();
    let f_ana = perturbation::exchange_fidelity(&p);
    let dn_ana = perturbation::exchange_heating(&p);

    Ok(ExperimentOutput {
        header: vec![
            "eta",
            "omega",
            "nbar",
            "delta",
            "fidelity_num",
            "fidelity_ana",
            "delta_n_num",
            "delta_n_ana",
        ],
        rows: vec![vec![
            fmt(rc.eta),
            fmt(rc.omega),
            fmt(rc.thermal.nbar),
            fmt(rc.delta),
            fmt(r.fidelity),
            fmt(f_ana),
            fmt(r.delta_n),
            fmt(dn_ana),
        ]],
        failures: vec![],
        summary: json!({
            "fidelity_num": r.fidelity,
            "fidelity_ana": f_ana,
            "optimal_delta": perturbation::optimal_delta(rc.eta, rc.thermal.nbar),
        }),
    })
}

fn gate_row(rc: &RamanConfig, r: &raman::GateResult) -> Vec<String> {
    let p = rc.exchange_params();
    let (h1, h2) = perturbation::gate_heating_analytic(&p);
    let nbar = rc.thermal.nbar;
    vec![
        fmt(rc.eta),
        fmt(rc.omega),
        fmt(nbar),
        fmt(r.f_eg),
        fmt(perturbation::gate_fidelity_analytic(&p)),
        fmt(r.n1),
        fmt(nbar + h1),
        fmt(r.n2),
        fmt(nbar + h2),
        r.converged.to_string(),
    ]
}

const GATE_HEADER: [&str; 10] = [
    "eta",
    "omega",
    "nbar",
    "F_eg_num",
    "F_eg_ana",
    "n1_num",
    "n1_ana",
    "n2_num",
    "n2_ana",
    "converged",
];

fn run_raman_gate(cfg: &mut RawConfig) -> CliResult<ExperimentOutput> {
    let rc = raman_config(cfg)?;
    let r = raman::simulate_gate(&rc)?;
    Ok(ExperimentOutput {
        header: GATE_HEADER.to_vec(),
        rows: vec![gate_row(&rc, &r)],
        failures: vec![],
        summary: json!({
            "f_eg": r.f_eg,
            "cutoff_shift": r.cutoff_shift,
            "converged": r.converged,
            "truth_phases": r.truth_phases.map(|ph| {
                ph.iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>()
            }),
        }),
    })
}

fn run_raman_sweep(cfg: &mut RawConfig) -> CliResult<ExperimentOutput> {
    let etas = cfg
        .f64_list("eta_list")?
        .ok_or_else(|| CliError::Config("missing key 'eta_list'".into()))?;
    if etas.is_empty() {
        return Err(CliError::Config("eta_list must not be empty".into()));
    }
    let omega_r = cfg.f64_or("omega_r", 5e-4)?;
    let mut template = RamanConfig::from_eta_omega_r(*etas.first().unwrap(), omega_r)
        .map_err(|e| CliError::Config(e.to_string()))?;
    template.delta = cfg.f64_or("delta", 0.0)?;
    let nbar = cfg.f64_or("nbar", 0.0)?;
    let cutoff = cfg.usize_or("thermal_cutoff", if nbar == 0.0 { 0 } else { 19 })?;
    template.thermal = ThermalSpec { nbar, cutoff };
    template.cavity_dim = cfg.usize_or("cavity_dim", 3)?;
    template.motion_dim = cfg.usize_or("motion_dim", 10)?;
    template.tol = cfg.f64_or("tol", 1e-9)?;

    let rows_raw = raman::sweep_eta(&template, &etas);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut converged_all = true;
    for row in &rows_raw {
        match &row.outcome {
            Ok(v) => {
                converged_all &= v.converged;
                rows.push(vec![
                    fmt(row.eta),
                    fmt(row.omega),
                    fmt(row.nbar),
                    fmt(v.f_eg_num),
                    fmt(v.f_eg_ana),
                    fmt(v.n1_num),
                    fmt(v.n1_ana),
                    fmt(v.n2_num),
                    fmt(v.n2_ana),
                    v.converged.to_string(),
                ]);
            }
            Err(e) => failures.push((format!("eta = {}", row.eta), e.clone())),
        }
    }
    Ok(ExperimentOutput {
        header: GATE_HEADER.to_vec(),
        rows,
        failures,
        summary: json!({ "points": etas.len(), "converged_all": converged_all }),
    })
}

fn adiabatic_config(cfg: &mut RawConfig) -> CliResult<AdiabaticConfig> {
    let eta = cfg
        .f64("eta")?
        .ok_or_else(|| CliError::Config("missing key 'eta'".into()))?;
    let omega_r = cfg.f64_or("omega_r", 1e-4)?;
    let mut ac = AdiabaticConfig::from_eta_omega_r(eta, omega_r)?;
    apply_adiabatic_keys(&mut ac, cfg)?;
    ac.validate()?;
    Ok(ac)
}

fn apply_adiabatic_keys(ac: &mut AdiabaticConfig, cfg: &mut RawConfig) -> CliResult<()> {
    ac.omega_max = cfg.f64_or("omega_max", ac.omega_max)?;
    ac.pulse_width = cfg.f64_or("pulse_width", ac.pulse_width)?;
    ac.separation = cfg.f64_or("separation", ac.separation)?;
    ac.window_pad = cfg.f64_or("window_pad", ac.window_pad)?;
    ac.cavity_dim = cfg.usize_or("cavity_dim", ac.cavity_dim)?;
    ac.motion_dim = cfg.usize_or("motion_dim", ac.motion_dim)?;
    let nbar = cfg.f64_or("nbar", 0.0)?;
    let cutoff = cfg.usize_or("thermal_cutoff", if nbar == 0.0 { 0 } else { 19 })?;
    ac.thermal = ThermalSpec { nbar, cutoff };
    ac.tol = cfg.f64_or("tol", ac.tol)?;
    Ok(())
}

const TRANSFER_HEADER: [&str; 8] = [
    "eta",
    "omega",
    "fidelity",
    "max_excited_pop",
    "max_cavity_pop",
    "delta_n1",
    "delta_n2",
    "converged",
];

fn transfer_row(eta: f64, omega: f64, r: &adiabatic::TransferResult) -> Vec<String> {
    vec![
        fmt(eta),
        fmt(omega),
        fmt(r.fidelity),
        fmt(r.max_excited_pop),
        fmt(r.max_cavity_pop),
        fmt(r.delta_n1),
        fmt(r.delta_n2),
        r.converged.to_string(),
    ]
}

fn run_adiabatic_transfer(cfg: &mut RawConfig) -> CliResult<ExperimentOutput> {
    let ac = adiabatic_config(cfg)?;
    let alpha = C64::new(
        cfg.f64_or("alpha_re", std::f64::consts::FRAC_1_SQRT_2)?,
        cfg.f64_or("alpha_im", 0.0)?,
    );
    let beta = C64::new(
        cfg.f64_or("beta_re", std::f64::consts::FRAC_1_SQRT_2)?,
        cfg.f64_or("beta_im", 0.0)?,
    );
    let report_cardinal = cfg.bool_or("cardinal", true)?;

    let r = adiabatic::simulate_transfer(&ac, alpha, beta)?;

    // worst case over the six cardinal inputs
    let min_cardinal = if report_cardinal {
        use rayon::prelude::*;
        let fids: Vec<CliResult<f64>> = adiabatic::cardinal_inputs()
            .par_iter()
            .map(|&(a, b)| Ok(adiabatic::simulate_transfer(&ac, a, b)?.fidelity))
            .collect();
        let mut min = f64::INFINITY;
        for f in fids {
            min = min.min(f?);
        }
        Some(min)
    } else {
        None
    };

    Ok(ExperimentOutput {
        header: TRANSFER_HEADER.to_vec(),
        rows: vec![transfer_row(ac.eta, ac.omega, &r)],
        failures: vec![],
        summary: json!({
            "fidelity": r.fidelity,
            "cutoff_shift": r.cutoff_shift,
            "min_cardinal_fidelity": min_cardinal,
        }),
    })
}

fn run_adiabatic_sweep(cfg: &mut RawConfig) -> CliResult<ExperimentOutput> {
    let etas = cfg
        .f64_list("eta_list")?
        .ok_or_else(|| CliError::Config("missing key 'eta_list'".into()))?;
    if etas.is_empty() {
        return Err(CliError::Config("eta_list must not be empty".into()));
    }
    let omega_r = cfg.f64_or("omega_r", 1e-4)?;
    let mut template = AdiabaticConfig::from_eta_omega_r(*etas.first().unwrap(), omega_r)
        .map_err(|e| CliError::Config(e.to_string()))?;
    apply_adiabatic_keys(&mut template, cfg)?;

    let rows_raw = adiabatic::sweep_eta_transfer(&template, &etas);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for row in &rows_raw {
        match &row.outcome {
            Ok(r) => rows.push(transfer_row(row.eta, row.omega, r)),
            Err(e) => failures.push((format!("eta = {}", row.eta), e.clone())),
        }
    }
    Ok(ExperimentOutput {
        header: TRANSFER_HEADER.to_vec(),
        rows,
        failures,
        summary: json!({ "points": etas.len() }),
    })
}

fn run_dispersive(cfg: &mut RawConfig) -> CliResult<ExperimentOutput> {
    let dc = DispersiveConfig::new(
        cfg.f64_or("g0", 10.0)?,
        cfg.f64_or("drive", 1000.0)?,
        cfg.f64_or("kappa", 40.0)?,
        cfg.f64_or("detuning", 100.0)?,
        cfg.f64_or("omega_r", 1.0)?,
        cfg.usize_or("grid", 64)?,
    )?;
    let mut dc = dc;
    dc.tol = cfg.f64_or("tol", dc.tol)?;
    let t_final = cfg.f64_or("t_final", 0.1)?;
    let samples = cfg.usize_or("samples", 20)?;
    let tau = cfg.f64("tau")?;
    let init = cfg.string_or("init", "ground");

    let rho0 = match init.as_str() {
        "ground" => dispersive::ground_band_state(&dc)?.1,
        "uniform" => {
            // zero-momentum plane wave
            let n = dc.grid;
            let amps = vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n];
            cqed::hilbert::StateVector::from_amplitudes(&dispersive::grid_space(&dc)?, amps)?
                .to_density()
        }
        other => {
            return Err(CliError::Config(format!(
                "init must be 'ground' or 'uniform', got '{other}'"
            )))
        }
    };

    let check = dispersive::heating_rate_check(&dc, &rho0, tau)?;
    let traj = dispersive::simulate_dispersive(&dc, &rho0, t_final, samples)?;
    let rows = traj
        .iter()
        .map(|s| vec![fmt(s.t), fmt(s.x), fmt(s.p), fmt(s.p2), fmt(s.energy)])
        .collect();

    Ok(ExperimentOutput {
        header: vec!["t", "x_mean", "p_mean", "p2_mean", "energy_mean"],
        rows,
        failures: vec![],
        summary: json!({
            "well_depth": dc.well_depth(),
            "scattering_rate": dc.scattering_rate(),
            "well_frequency": dc.well_frequency(),
            "numeric_heating_rate": check.numeric_rate,
            "ehrenfest_heating_rate": check.ehrenfest_rate,
        }),
    })
}

/// Sorted parameter map for the run summary.
pub fn parameter_map(cfg: &RawConfig) -> Map<String, Value> {
    let mut m = Map::new();
    for (k, v) in cfg.entries() {
        m.insert(k.clone(), Value::String(v.clone()));
    }
    m
}
