// dev scratch: confirm the thermal exchange formula gap scales as eta^6
use cqed::hilbert::ThermalSpec;
use cqed::perturbation;
use cqed::raman::{self, MotionalInit, RamanConfig};

fn main() {
    for eta in [0.05, 0.1, 0.2] {
        let cfg = RamanConfig::from_eta_omega_r(eta, 5e-4)
            .unwrap()
            .with_thermal(ThermalSpec { nbar: 1.0, cutoff: 19 })
            .unwrap();
        let r = raman::simulate_exchange(&cfg, MotionalInit::Thermal).unwrap();
        let f_ana = perturbation::exchange_fidelity(&cfg.exchange_params());
        println!("eta {eta}: |num-ana| = {:.4e}", (r.fidelity - f_ana).abs());
    }
}
