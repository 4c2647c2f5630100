//! Closed-form fourth-order Lamb-Dicke results for the photon-exchange
//! dynamics: post-pulse amplitudes, exchange fidelity with the optimal
//! pulse trim, gate entanglement fidelity, and motional heating, all with
//! geometric thermal averages already performed.
//!
//! Two published coefficients are corrected here; the printed variants are
//! kept alongside for comparison:
//! * the δ cross term of the exchange fidelity must be `π²η²δ(2n̄+1)/4`
//!   (with η², not η) or the stated optimum `δ* = η²(2n̄+1)/2` is not a
//!   stationary point;
//! * the oscillatory term of the gate entanglement fidelity must carry
//!   `(η²g/2ω)²` (not `η²g²/4ω`, which is dimensionally inconsistent and
//!   contradicts the ~10% error level at η = 0.4 that the corrected form
//!   reproduces).

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Dimensionless exchange parameters, all rates in units of g.
#[derive(Debug, Clone, Copy)]
pub struct ExchangeParams {
    pub eta: f64,
    pub omega: f64,
    pub g: f64,
    pub nbar: f64,
    pub delta: f64,
}

impl ExchangeParams {
    pub fn new(eta: f64, omega: f64, g: f64, nbar: f64, delta: f64) -> Self {
        Self { eta, omega, g, nbar, delta }
    }

    /// The η² series loses accuracy above η ≈ 0.45.
    pub fn within_series_validity(&self) -> bool {
        self.eta <= 0.45
    }

    fn sin_pi_ratio(&self) -> f64 {
        (PI * self.omega / self.g).sin()
    }

    /// (η²g/2ω)·sin(πω/g), the oscillatory heating amplitude.
    fn osc(&self) -> f64 {
        self.eta.powi(2) * self.g / (2.0 * self.omega) * self.sin_pi_ratio()
    }
}

/// Post-pulse amplitudes for one initial Fock state `n`, interaction time
/// `t = π(1+δ)/g`, initial internal/cavity state `|1, 0_c⟩`. Overall phase
/// dropped.
#[derive(Debug, Clone, Copy)]
pub struct PostPulseAmplitudes {
    /// on `|r, 1_c, n⟩` (the exchange target)
    pub target: C64,
    /// on `|1, 0_c, n⟩`
    pub carrier: C64,
    /// on `|1, 0_c, n+2⟩`
    pub raised: C64,
    /// on `|1, 0_c, n-2⟩` (zero for n < 2)
    pub lowered: C64,
}

pub fn post_pulse_state_coeffs(n: usize, p: &ExchangeParams) -> PostPulseAmplitudes {
    let nf = n as f64;
    let x = PI * p.eta.powi(2) / 4.0 * (2.0 * nf + 1.0) - PI * p.delta / 2.0;
    let y = p.eta.powi(2) * p.g / (4.0 * p.omega) * p.sin_pi_ratio();
    let target = C64::new(1.0 - 0.5 * x * x - y * y * (nf * nf + nf + 1.0), 0.0);
    let carrier = C64::new(0.0, x);
    let pref = p.eta.powi(2) * p.g / (8.0 * p.omega);
    let phase = 2.0 * PI * p.omega / p.g;
    let raised = pref
        * ((nf + 1.0) * (nf + 2.0)).sqrt()
        * (C64::new(1.0, 0.0) - C64::new(0.0, -phase).exp());
    let lowered = if n < 2 {
        C64::new(0.0, 0.0)
    } else {
        -pref * (nf * (nf - 1.0)).sqrt() * (C64::new(1.0, 0.0) - C64::new(0.0, phase).exp())
    };
    PostPulseAmplitudes { target, carrier, raised, lowered }
}

/// Thermal exchange fidelity with the corrected δ cross term:
/// `F = 1 - π²δ²/4 + π²η²δ(2n̄+1)/4 - (πη²/4)²(8n̄²+8n̄+1)
///     - (η²g/2ω)² sin²(πω/g)(n̄²+n̄+½)`.
pub fn exchange_fidelity(p: &ExchangeParams) -> f64 {
    let nb = p.nbar;
    1.0 - PI.powi(2) * p.delta.powi(2) / 4.0
        + PI.powi(2) * p.eta.powi(2) * p.delta / 4.0 * (2.0 * nb + 1.0)
        - (PI * p.eta.powi(2) / 4.0).powi(2) * (8.0 * nb * nb + 8.0 * nb + 1.0)
        - p.osc().powi(2) * (nb * nb + nb + 0.5)
}

/// The fidelity exactly as printed (η instead of η² in the cross term);
/// kept for comparison, not used by the simulators.
pub fn exchange_fidelity_printed(p: &ExchangeParams) -> f64 {
    let nb = p.nbar;
    1.0 - PI.powi(2) * p.delta.powi(2) / 4.0
        + PI.powi(2) * p.eta * p.delta / 4.0 * (2.0 * nb + 1.0)
        - (PI * p.eta.powi(2) / 4.0).powi(2) * (8.0 * nb * nb + 8.0 * nb + 1.0)
        - p.osc().powi(2) * (nb * nb + nb + 0.5)
}

/// Optimal pulse trim `δ* = η²(2n̄+1)/2`.
pub fn optimal_delta(eta: f64, nbar: f64) -> f64 {
    eta * eta * (2.0 * nbar + 1.0) / 2.0
}

/// Exchange fidelity at the optimal trim:
/// `F_opt = 1 - (πη²/2)²(n̄²+n̄) - (η²g/2ω)² sin²(πω/g)(n̄²+n̄+½)`.
pub fn exchange_fidelity_optimal(p: &ExchangeParams) -> f64 {
    let nb = p.nbar;
    1.0 - (PI * p.eta.powi(2) / 2.0).powi(2) * (nb * nb + nb)
        - p.osc().powi(2) * (nb * nb + nb + 0.5)
}

/// Slow-trap limit ω ≪ g of `exchange_fidelity_optimal`:
/// `F_opt ≃ 1 - 2(πη²/2)²(n̄²+n̄+¼)`.
pub fn exchange_fidelity_optimal_slow_trap(eta: f64, nbar: f64) -> f64 {
    1.0 - 2.0 * (PI * eta * eta / 2.0).powi(2) * (nbar * nbar + nbar + 0.25)
}

/// Fast-trap limit ω ≫ g (mechanical rotating-wave regime):
/// `F_opt ≃ 1 - (πη²/2)²(n̄²+n̄)`.
pub fn exchange_fidelity_optimal_fast_trap(eta: f64, nbar: f64) -> f64 {
    1.0 - (PI * eta * eta / 2.0).powi(2) * (nbar * nbar + nbar)
}

/// Motional excitation gained in one exchange:
/// `⟨A†A⟩ - n̄ = (η²g/2ω)² sin²(πω/g)(2n̄+1)`.
pub fn exchange_heating(p: &ExchangeParams) -> f64 {
    p.osc().powi(2) * (2.0 * p.nbar + 1.0)
}

/// Gate entanglement fidelity for the unoptimized three-pulse gate, with
/// the corrected `(η²g/2ω)²` coefficient:
/// `F_eg = 1 - π²η⁴(n̄²+n̄+⅛)
///        - (η²g/2ω)² sin²(πω/g)(1+cos²(πω/g))(n̄²+n̄+½)`.
pub fn gate_fidelity_analytic(p: &ExchangeParams) -> f64 {
    let nb = p.nbar;
    let cos2 = (PI * p.omega / p.g).cos().powi(2);
    1.0 - PI.powi(2) * p.eta.powi(4) * (nb * nb + nb + 0.125)
        - p.osc().powi(2) * (1.0 + cos2) * (nb * nb + nb + 0.5)
}

/// The gate fidelity exactly as printed (coefficient `η²g²/4ω`); kept for
/// comparison, not used by the simulators.
pub fn gate_fidelity_analytic_printed(p: &ExchangeParams) -> f64 {
    let nb = p.nbar;
    let s2 = p.sin_pi_ratio().powi(2);
    let cos2 = (PI * p.omega / p.g).cos().powi(2);
    1.0 - PI.powi(2) * p.eta.powi(4) * (nb * nb + nb + 0.125)
        - p.eta.powi(2) * p.g.powi(2) / (4.0 * p.omega) * s2 * (1.0 + cos2) * (nb * nb + nb + 0.5)
}

/// Final motional excitations of the two atoms above n̄ after the gate:
/// `n₁-n̄ = (η²g/2ω)² sin²(πω/g)(2n̄+1)`,
/// `n₂-n̄ = (η²g/4ω)² sin²(2πω/g)(2n̄+1)`.
pub fn gate_heating_analytic(p: &ExchangeParams) -> (f64, f64) {
    let nb = 2.0 * p.nbar + 1.0;
    let n1 = p.osc().powi(2) * nb;
    let n2 = (p.eta.powi(2) * p.g / (4.0 * p.omega)).powi(2)
        * (2.0 * PI * p.omega / p.g).sin().powi(2)
        * nb;
    (n1, n2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64, omega: f64, nbar: f64, delta: f64) -> ExchangeParams {
        ExchangeParams::new(eta, omega, 1.0, nbar, delta)
    }

    #[test]
    fn post_pulse_point_dipole_is_clean() {
        let p = params(0.0, 0.1, 0.0, 0.0);
        let a = post_pulse_state_coeffs(0, &p);
        assert!((a.target - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(a.carrier.norm() < 1e-15);
        assert!(a.raised.norm() < 1e-15);
        assert!(a.lowered.norm() < 1e-15);
    }

    #[test]
    fn post_pulse_no_lowering_below_vacuum() {
        let p = params(0.3, 0.05, 0.0, 0.0);
        assert_eq!(post_pulse_state_coeffs(0, &p).lowered, C64::new(0.0, 0.0));
        assert_eq!(post_pulse_state_coeffs(1, &p).lowered, C64::new(0.0, 0.0));
        assert!(post_pulse_state_coeffs(2, &p).lowered.norm() > 0.0);
    }

    #[test]
    fn post_pulse_carrier_amplitude_value() {
        // n = 1, η = 0.2, ω/g = 0.05, δ = 0: i(πη²/4)(2n+1) = 0.09425 i
        let p = params(0.2, 0.05, 0.0, 0.0);
        let a = post_pulse_state_coeffs(1, &p);
        assert!((a.carrier - C64::new(0.0, 0.0942478)).norm() < 1e-6);
    }

    #[test]
    fn fidelity_is_one_at_zero_eta_and_delta() {
        for nbar in [0.0, 1.0, 2.0] {
            for omega in [0.01, 0.3] {
                let p = params(0.0, omega, nbar, 0.0);
                assert!((exchange_fidelity(&p) - 1.0).abs() < 1e-15);
                assert!((gate_fidelity_analytic(&p) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn corrected_fidelity_is_stationary_at_optimal_delta() {
        let eta = 0.23;
        let nbar = 0.7;
        let omega = 0.04;
        let d_star = optimal_delta(eta, nbar);
        let eps = 1e-6;
        let f = |d: f64| exchange_fidelity(&params(eta, omega, nbar, d));
        let grad = (f(d_star + eps) - f(d_star - eps)) / (2.0 * eps);
        assert!(grad.abs() < 1e-9, "∂F/∂δ at δ* = {grad:e}");
        // the printed form is NOT stationary there
        let fp = |d: f64| exchange_fidelity_printed(&params(eta, omega, nbar, d));
        let grad_printed = (fp(d_star + eps) - fp(d_star - eps)) / (2.0 * eps);
        assert!(grad_printed.abs() > 1e-3);
    }

    #[test]
    fn optimal_delta_values() {
        assert_eq!(optimal_delta(0.0, 3.0), 0.0);
        assert!((optimal_delta(0.2, 0.0) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn optimum_beats_neighbors_on_a_grid() {
        let eta = 0.2;
        let nbar = 1.0;
        let omega = 0.05;
        let d_star = optimal_delta(eta, nbar);
        let f_star = exchange_fidelity(&params(eta, omega, nbar, d_star));
        for k in -10i32..=10 {
            let d = d_star + k as f64 * 0.01;
            let f = exchange_fidelity(&params(eta, omega, nbar, d));
            assert!(f <= f_star + 1e-12, "δ = {d}: F = {f} > F* = {f_star}");
        }
    }

    #[test]
    fn fidelity_at_optimum_equals_optimal_formula() {
        for (eta, omega, nbar) in [(0.15, 0.02, 0.0), (0.3, 0.08, 1.0), (0.1, 0.5, 2.0)] {
            let d_star = optimal_delta(eta, nbar);
            let f = exchange_fidelity(&params(eta, omega, nbar, d_star));
            let f_opt = exchange_fidelity_optimal(&params(eta, omega, nbar, d_star));
            assert!((f - f_opt).abs() < 1e-12, "eta {eta} omega {omega} nbar {nbar}");
        }
    }

    #[test]
    fn exchange_fidelity_example_value() {
        // η = 0.4, n̄ = 0, δ = 0, ω/g = 0.003125
        let p = params(0.4, 0.003125, 0.0, 0.0);
        let f = exchange_fidelity(&p);
        assert!((f - 0.9526).abs() < 1e-4, "F = {f}");
    }

    #[test]
    fn optimal_fidelity_example_values() {
        // ω ≫ g, n̄ = 0: no error at this order
        assert!((exchange_fidelity_optimal_fast_trap(0.3, 0.0) - 1.0).abs() < 1e-15);
        // η = 0.1, n̄ = 1, ω/g = 0.001
        let p = params(0.1, 0.001, 1.0, 0.0);
        let f = exchange_fidelity_optimal(&p);
        assert!((f - 0.99889).abs() < 1e-5, "F_opt = {f}");
        // and the slow-trap limit agrees there
        let f_slow = exchange_fidelity_optimal_slow_trap(0.1, 1.0);
        assert!((f - f_slow).abs() < 1e-6);
    }

    #[test]
    fn heating_values() {
        assert_eq!(exchange_heating(&params(0.0, 0.1, 1.0, 0.0)), 0.0);
        // stroboscopic decoupling: sin(πω/g) = 0 at ω = g
        let p = params(0.3, 1.0, 0.5, 0.0);
        assert!(exchange_heating(&p).abs() < 1e-28);
        // η = 0.2, ω/g = 0.1, n̄ = 0
        let p = params(0.2, 0.1, 0.0, 0.0);
        assert!((exchange_heating(&p) - 0.00382).abs() < 1e-5);
    }

    #[test]
    fn gate_fidelity_limits() {
        // η = 0.4, n̄ = 0, ω ≪ g: errors near 10%
        let p = params(0.4, 0.0005 / 0.16, 0.0, 0.0);
        let f = gate_fidelity_analytic(&p);
        assert!((1.0 - f - 0.0947).abs() < 2e-3, "1-F = {}", 1.0 - f);
        // η = 0.2, n̄ = 0, ω ≪ g: F ≈ 1 - 3π²η⁴/8
        let p = params(0.2, 0.0005 / 0.04, 0.0, 0.0);
        let f = gate_fidelity_analytic(&p);
        let limit = 1.0 - 3.0 * PI.powi(2) * 0.2_f64.powi(4) / 8.0;
        assert!((f - limit).abs() < 1e-5, "F = {f}, limit {limit}");
        assert!((f - 0.99408).abs() < 1e-4);
    }

    #[test]
    fn gate_heating_values() {
        let (n1, n2) = gate_heating_analytic(&params(0.0, 0.2, 0.0, 0.0));
        assert_eq!((n1, n2), (0.0, 0.0));

        // η = 0.3, ω/g = 0.25, n̄ = 0
        let (n1, n2) = gate_heating_analytic(&params(0.3, 0.25, 0.0, 0.0));
        assert!((n1 - 0.0162).abs() < 1e-4, "n1 = {n1}");
        assert!((n2 - 0.0081).abs() < 1e-4, "n2 = {n2}");

        // ω ≪ g limit: both approach (πη²/2)²(2n̄+1)
        let p = params(0.2, 1e-4, 0.0, 0.0);
        let (n1, n2) = gate_heating_analytic(&p);
        let limit = (PI * 0.04 / 2.0_f64).powi(2);
        assert!((n1 - limit).abs() < 1e-6 * limit.max(1.0));
        assert!((n2 / n1 - 1.0).abs() < 1e-4, "n1 {n1} n2 {n2}");
    }

    #[test]
    fn thermal_average_of_per_n_populations_reproduces_fidelity() {
        // per-n target populations, geometric weights, summed far past the
        // cutoff must agree with the closed-form thermal F to O(η⁶)
        for (eta, omega, nbar, delta) in
            [(0.1, 0.02, 0.6, 0.0), (0.2, 0.05, 1.0, 0.01), (0.15, 0.3, 0.4, -0.005)]
        {
            let p = params(eta, omega, nbar, delta);
            let mut sum = 0.0;
            let mut wsum = 0.0;
            for n in 0..400 {
                let w = nbar.powi(n as i32) / (1.0 + nbar).powi(n as i32 + 1);
                let a = post_pulse_state_coeffs(n, &p);
                sum += w * a.target.norm_sqr();
                wsum += w;
            }
            sum /= wsum;
            let f = exchange_fidelity(&p);
            let bound = 30.0 * eta.powi(6) + 1e-12;
            assert!(
                (sum - f).abs() < bound,
                "eta {eta}: series {sum} vs formula {f} (diff {:e}, bound {bound:e})",
                (sum - f).abs()
            );
        }
    }

    #[test]
    fn series_validity_flag() {
        assert!(params(0.3, 0.1, 0.0, 0.0).within_series_validity());
        assert!(!params(0.5, 0.1, 0.0, 0.0).within_series_validity());
    }
}
