use super::*;
use crate::linalg as _;

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    // least squares on (ln x, ln y)
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

#[test]
fn config_window_and_envelopes() {
    let cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    assert!((cfg.omega - 1e-4 / 0.04).abs() < 1e-12);
    let (a, b) = cfg.window();
    assert_eq!(a, -120.0);
    assert_eq!(b, 200.0);
    // counterintuitive order: atom 2 is strong first
    let f1 = cfg.envelope_atom1();
    let f2 = cfg.envelope_atom2();
    assert!(f2(cfg.t1) > 0.999 && f1(cfg.t1) < 0.2);
    assert!(f1(cfg.t2()) > 0.999 && f2(cfg.t2()) < 0.2);
    assert!(cfg.edge_envelope() < 0.012);
}

#[test]
fn window_clipping_rejected() {
    let mut cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    cfg.window_pad = 40.0; // envelope 0.6 at the edge
    assert!(cfg.validate().is_err());
}

#[test]
fn rr0_is_exact_eigenstate_at_any_eta() {
    let cfg = AdiabaticConfig::from_eta(0.5).unwrap();
    let space = adiabatic_space(&cfg, 6, 7).unwrap();
    let h = adiabatic_hamiltonian(&cfg, &space).unwrap();
    for (n1, n2) in [(0usize, 0usize), (1, 2), (3, 0)] {
        let psi = StateVector::basis_state(&space, &[LR, LR, 0, n1, n2]).unwrap();
        let d = space.total_dim();
        let mut out = vec![c(0.0, 0.0); d];
        let mut scratch = (vec![c(0.0, 0.0); d], vec![c(0.0, 0.0); d]);
        for t in [-100.0, 40.0, 150.0] {
            h.apply_at(t, psi.amplitudes().as_slice().unwrap(), &mut out, &mut scratch);
            let e = cfg.omega * (n1 + n2) as f64;
            let mut worst = 0.0f64;
            for (k, o) in out.iter().enumerate() {
                let expect = e * psi.amplitudes()[k];
                worst = worst.max((o - expect).norm());
            }
            assert!(worst < 1e-12, "(n1,n2)=({n1},{n2}) t={t}: residual {worst:e}");
        }
    }
}

#[test]
fn hamiltonian_hermitian_at_sampled_times() {
    let mut cfg = AdiabaticConfig::from_eta(0.3).unwrap();
    cfg.motion_dim = 4;
    let space = adiabatic_space(&cfg, 4, 4).unwrap();
    let h = adiabatic_hamiltonian(&cfg, &space).unwrap();
    h.check_hermitian_at(&[-50.0, 0.0, 40.0, 80.0, 170.0]).unwrap();
}

#[test]
fn point_dipole_dark_state_is_annihilated() {
    // at eta = 0 the printed dark state satisfies H|D1> = 0 (ground motion)
    let cfg = AdiabaticConfig::from_eta_omega(0.0, 0.0025).unwrap();
    let t_mid = 0.5 * (cfg.t1 + cfg.t2());
    let r = dark_state_residual(&cfg, 0.0, t_mid).unwrap();
    assert!(r < 1e-12, "residual {r:e}");
}

#[test]
fn dark_state_at_zero_eta_is_printed_form() {
    let cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    let space = adiabatic_space(&cfg, 5, 5).unwrap();
    let (o1, o2, g) = (0.7, 1.1, 1.0);
    let d = dark_state_analytic(&space, o1, o2, g, 0.0, 0, 0).unwrap();
    let norm = (o1 * o1 * g * g + o2 * o2 * g * g + o1 * o1 * o2 * o2).sqrt();
    let checks = [
        ([LR, L1, 0, 0, 0], o1 * g / norm),
        ([L1, LR, 0, 0, 0], o2 * g / norm),
        ([LR, LR, 1, 0, 0], -o1 * o2 / norm),
    ];
    for (levels, expect) in checks {
        let idx = space.basis_index(&levels).unwrap();
        assert!((d.amplitudes()[idx] - c(expect, 0.0)).norm() < 1e-14);
    }
    assert!((d.norm() - 1.0).abs() < 1e-14);
}

#[test]
fn dark_state_single_surviving_term_at_omega1_zero() {
    // with omega1 = 0 only the |1,r,0> internal channel survives exactly;
    // the motional profile carries the O(eta^2) dressing, so the overlap
    // with the bare Fock state deviates at O(eta^4)
    let cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    let space = adiabatic_space(&cfg, 6, 6).unwrap();
    let d = dark_state_analytic(&space, 0.0, 1.3, 1.0, 0.2, 1, 2).unwrap();
    for (idx, amp) in d.amplitudes().iter().enumerate() {
        if amp.norm() == 0.0 {
            continue;
        }
        let lv = space.levels_of(idx);
        assert_eq!((lv[0], lv[1], lv[2]), (L1, LR, 0), "leak outside |1,r,0>");
        assert_eq!(lv[4], 2, "motion-2 must stay in its Fock state");
    }
    // deviation from the bare state is (eta^4/8)Var(X^2) = 1.2e-3 at n = 1
    let bare = StateVector::basis_state(&space, &[L1, LR, 0, 1, 2]).unwrap();
    let overlap = bare.inner(&d).unwrap().norm();
    assert!((overlap - (1.0 - 1.2e-3)).abs() < 2e-4, "overlap {overlap}");
}

#[test]
fn dark_state_rejects_zero_amplitudes() {
    let cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    let space = adiabatic_space(&cfg, 5, 5).unwrap();
    assert!(dark_state_analytic(&space, 0.0, 0.0, 1.0, 0.1, 0, 0).is_err());
}

#[test]
fn residual_scales_as_eta_fourth() {
    // run at tiny omega_r so the trap's O(omega_r) commutator floor sits
    // far below the coupling residual over the whole fit range
    let cfg = AdiabaticConfig::from_eta_omega_r(0.2, 1e-8).unwrap();
    let t_mid = 0.5 * (cfg.t1 + cfg.t2());

    let r01 = dark_state_residual(&cfg, 0.1, t_mid).unwrap();
    let r02 = dark_state_residual(&cfg, 0.2, t_mid).unwrap();
    let ratio = r02 / r01;
    assert!((9.6..=22.4).contains(&ratio), "ratio {ratio} (expect 16 +/- 40%)");

    let pts: Vec<(f64, f64)> = [0.05, 0.1, 0.15, 0.2, 0.3]
        .iter()
        .map(|&eta| (eta, dark_state_residual(&cfg, eta, t_mid).unwrap()))
        .collect();
    let slope = fit_slope(&pts);
    assert!((3.5..=4.5).contains(&slope), "slope {slope}");
}

#[test]
fn residual_scaling_robust_to_pulse_amplitude() {
    let t_mid = 40.0;
    for om in [1.0, 2.0, 4.0] {
        let mut cfg = AdiabaticConfig::from_eta_omega_r(0.2, 1e-8).unwrap();
        cfg.omega_max = om;
        let r01 = dark_state_residual(&cfg, 0.1, t_mid).unwrap();
        let r02 = dark_state_residual(&cfg, 0.2, t_mid).unwrap();
        let ratio = r02 / r01;
        assert!((9.6..=22.4).contains(&ratio), "omega_max {om}: ratio {ratio}");
    }
}

#[test]
fn transfer_rejects_unnormalized_input() {
    let cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    assert!(simulate_transfer(&cfg, c(1.0, 0.0), c(0.5, 0.0)).is_err());
}

#[test]
fn nonadiabatic_pulses_reported_as_failure() {
    // pulses far too fast for adiabatic following
    let mut cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    cfg.pulse_width = 2.0;
    cfg.separation = 4.0;
    cfg.window_pad = 6.5;
    cfg.motion_dim = 4;
    let err = simulate_transfer(&cfg, c(S, 0.0), c(S, 0.0));
    match err {
        Err(CqedError::Convergence(msg)) => {
            assert!(msg.contains("nonadiabatic"), "unexpected message: {msg}")
        }
        other => panic!("expected nonadiabatic failure, got {other:?}"),
    }
}

#[test]
fn transfer_of_dark_component_is_exact() {
    // alpha = 1 input is |r,r,0>, invariant at every eta
    let mut cfg = AdiabaticConfig::from_eta(0.3).unwrap();
    cfg.motion_dim = 4;
    cfg.tol = 3e-6;
    let r = simulate_transfer(&cfg, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
    assert!(r.fidelity > 1.0 - 1e-8, "fidelity {}", r.fidelity);
    assert!(r.max_excited_pop < 1e-12);
    assert!(r.delta_n1.abs() < 1e-10 && r.delta_n2.abs() < 1e-10);
}

#[test]
fn cavity_population_bounded_by_dark_state_prediction() {
    let mut cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    cfg.motion_dim = 5;
    cfg.tol = 3e-6;
    let (alpha, beta) = (c(S, 0.0), c(S, 0.0));
    let r = simulate_transfer(&cfg, alpha, beta).unwrap();
    // analytic dark-state cavity weight at the pulse-overlap maximum,
    // weighted by the |beta|^2 population that actually rides |D1>
    let mut pred_max: f64 = 0.0;
    let f1 = cfg.envelope_atom1();
    let f2 = cfg.envelope_atom2();
    let mut t = cfg.t1;
    while t <= cfg.t2() {
        let o1 = cfg.omega_max * f1(t);
        let o2 = cfg.omega_max * f2(t);
        let g2 = cfg.g * cfg.g;
        let p = (o1 * o1 * o2 * o2) / (g2 * (o1 * o1 + o2 * o2) + o1 * o1 * o2 * o2);
        pred_max = pred_max.max(beta.norm_sqr() * p);
        t += 0.25;
    }
    assert!(
        r.max_cavity_pop <= 2.0 * pred_max * (1.0 + 4.0 * cfg.eta * cfg.eta),
        "cavity pop {} vs prediction {}",
        r.max_cavity_pop,
        pred_max
    );
    // and it does reach the same scale
    assert!(r.max_cavity_pop > 0.5 * pred_max);
}

#[test]
fn sweep_handles_bad_points() {
    let cfg = AdiabaticConfig::from_eta(0.2).unwrap();
    let rows = sweep_eta_transfer(&cfg, &[-1.0]);
    assert!(rows[0].outcome.is_err());
}

#[test]
fn cardinal_inputs_are_normalized() {
    for (a, b) in cardinal_inputs() {
        assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-15);
    }
}
