//! Far-detuned 1D master equation: optical potential plus cavity-assisted
//! light scattering.
//!
//! With the atom and cavity adiabatically eliminated the motional state
//! alone obeys `ρ̇ = -i[H',ρ] + Γ D[cos²(k_L x)]ρ` with
//! `H' = p²/2m - U₀ cos²(k_L x)`, well depth `U₀ = g₀²E²/(κ²Δ)` and
//! scattering rate `Γ = 2g₀⁴E²/(κ³Δ²)`. Δ > 0 gives an attractive well at
//! the field antinode.
//!
//! Representation: a periodic position grid over exactly one potential
//! period, `x_j = -π/2 + jπ/N` in units of 1/k_L (so the single well center
//! x = 0 is interior). Momentum is defined through the discrete Fourier
//! transform with wavenumbers `k_n = 2n`, `n = -N/2 .. N/2-1`, and the
//! kinetic energy is `ω_r k²` per mode (ħ = 1, k_L = 1, so p²/2m = ω_r p²).

use ndarray::Array2;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::dynamics::{evolve_lindblad_observed, LindbladModel};
use crate::error::{CqedError, Result};
use crate::hilbert::{DensityMatrix, Operator, StateVector, TensorSpace};
use crate::linalg;

/// Model rates for the dispersive regime. All rates share one unit system
/// (set ω_r = 1 to work in recoil units); lengths are in 1/k_L.
#[derive(Debug, Clone, Copy)]
pub struct DispersiveConfig {
    /// Single-photon coupling g₀.
    pub g0: f64,
    /// Cavity drive amplitude E.
    pub drive: f64,
    /// Cavity field decay κ.
    pub kappa: f64,
    /// Detuning Δ (nonzero; positive traps at antinodes).
    pub detuning: f64,
    /// Recoil frequency ħk_L²/2m.
    pub omega_r: f64,
    /// Number of grid points over one period (power of two, ≥ 32).
    pub grid: usize,
    pub tol: f64,
}

impl DispersiveConfig {
    pub fn new(
        g0: f64,
        drive: f64,
        kappa: f64,
        detuning: f64,
        omega_r: f64,
        grid: usize,
    ) -> Result<Self> {
        let cfg = Self { g0, drive, kappa, detuning, omega_r, grid, tol: 1e-8 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.detuning == 0.0 {
            return Err(CqedError::InvalidArgument("detuning must be nonzero".into()));
        }
        if !(self.kappa > 0.0 && self.omega_r > 0.0) {
            return Err(CqedError::InvalidArgument(
                "kappa and omega_r must be positive".into(),
            ));
        }
        if self.grid < 32 || !self.grid.is_power_of_two() {
            return Err(CqedError::InvalidDimension(format!(
                "grid must be a power of two ≥ 32, got {}",
                self.grid
            )));
        }
        Ok(())
    }

    /// Well depth `U₀ = g₀²E²/(κ²Δ)`.
    pub fn well_depth(&self) -> f64 {
        self.g0.powi(2) * self.drive.powi(2) / (self.kappa.powi(2) * self.detuning)
    }

    /// Scattering rate `Γ = 2g₀⁴E²/(κ³Δ²)`.
    pub fn scattering_rate(&self) -> f64 {
        2.0 * self.g0.powi(4) * self.drive.powi(2)
            / (self.kappa.powi(3) * self.detuning.powi(2))
    }

    /// Harmonic frequency at the well bottom, `ω_ho = 2√(U₀ ω_r)`.
    pub fn well_frequency(&self) -> f64 {
        2.0 * (self.well_depth().max(0.0) * self.omega_r).sqrt()
    }

    /// Grid coordinates.
    pub fn positions(&self) -> Vec<f64> {
        let n = self.grid;
        (0..n).map(|j| -PI / 2.0 + PI * j as f64 / n as f64).collect()
    }
}

/// Grid wavenumbers in DFT order (0, 2, 4, ..., -N, ..., -2).
fn wavenumbers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let idx = if m <= n / 2 - 1 { m as i64 } else { m as i64 - n as i64 };
            2.0 * idx as f64
        })
        .collect()
}

/// Dense position-space matrix of a function of momentum, via the DFT:
/// `M = F† diag(f(k)) F`.
fn momentum_function(n: usize, f: impl Fn(f64) -> f64) -> Array2<C64> {
    let ks = wavenumbers(n);
    let mut m = Array2::zeros((n, n));
    for j in 0..n {
        for l in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (idx, &k) in ks.iter().enumerate() {
                // e^{ik(x_j - x_l)} with x spacing π/N and k = 2·(DFT index)
                let phase = 2.0 * PI * idx as f64 * (j as f64 - l as f64) / n as f64;
                acc += f(k) * C64::new(0.0, phase).exp();
            }
            m[(j, l)] = acc / n as f64;
        }
    }
    // Hermitian by construction; clean roundoff
    let md = linalg::dag(&m);
    (&m + &md).mapv(|z| 0.5 * z)
}

/// The grid tensor space (single factor).
pub fn grid_space(cfg: &DispersiveConfig) -> Result<TensorSpace> {
    TensorSpace::single(cfg.grid)
}

/// Momentum operator on the grid.
pub fn momentum_operator(cfg: &DispersiveConfig) -> Result<Operator> {
    Operator::new(grid_space(cfg)?, momentum_function(cfg.grid, |k| k))
}

/// Position operator (diagonal, principal coordinate in [-π/2, π/2)).
pub fn position_operator(cfg: &DispersiveConfig) -> Result<Operator> {
    let xs = cfg.positions();
    let mut m = Array2::zeros((cfg.grid, cfg.grid));
    for (j, &x) in xs.iter().enumerate() {
        m[(j, j)] = C64::new(x, 0.0);
    }
    Operator::new(grid_space(cfg)?, m)
}

/// Build `H' = ω_r p² - U₀ cos²(x)` and the scattering jump. The jump entry
/// carries rate Γ/2 because [`LindbladModel`] applies `2γ D[c]` per entry,
/// so the generator is exactly `Γ D[cos²(k_L x)]`.
pub fn dispersive_generator(cfg: &DispersiveConfig) -> Result<LindbladModel> {
    cfg.validate()?;
    let n = cfg.grid;
    let u0 = cfg.well_depth();

    // coarseness check: the bound states this well supports must fit well
    // inside the momentum lattice (|k| ≤ N)
    if u0 > 0.0 {
        let p_rms = (u0 / cfg.omega_r).powf(0.25) / std::f64::consts::SQRT_2;
        if 6.0 * p_rms > n as f64 {
            return Err(CqedError::InvalidDimension(format!(
                "grid too coarse: well depth U₀ = {u0:.3e} needs momentum spread \
                 {p_rms:.1} but the lattice only reaches |k| = {n}"
            )));
        }
    }

    let space = grid_space(cfg)?;
    let mut h = momentum_function(n, |k| cfg.omega_r * k * k);
    for (j, &x) in cfg.positions().iter().enumerate() {
        h[(j, j)] -= C64::new(u0 * x.cos().powi(2), 0.0);
    }
    let hamiltonian = Operator::new(space.clone(), h)?;

    let mut c = Array2::zeros((n, n));
    for (j, &x) in cfg.positions().iter().enumerate() {
        c[(j, j)] = C64::new(x.cos().powi(2), 0.0);
    }
    let jump = Operator::new(space, c)?;
    LindbladModel::new(hamiltonian, vec![(jump, cfg.scattering_rate() / 2.0)])
}

/// Lowest eigenstate of `H'` (the ground band at this grid resolution).
pub fn ground_band_state(cfg: &DispersiveConfig) -> Result<(f64, DensityMatrix)> {
    let model = dispersive_generator(cfg)?;
    let (vals, vecs) = linalg::hermitian_eigen(model.hamiltonian.matrix())?;
    let n = cfg.grid;
    let mut amps = ndarray::Array1::zeros(n);
    for j in 0..n {
        amps[j] = vecs[(j, 0)];
    }
    let psi = StateVector::new(grid_space(cfg)?, amps)?;
    Ok((vals[0], psi.to_density()))
}

/// Position/momentum moments sampled along a dissipative evolution.
#[derive(Debug, Clone, Copy)]
pub struct MomentSample {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub p2: f64,
    pub energy: f64,
}

/// Integrate the dispersive master equation and return moments at
/// `samples + 1` equally spaced times from 0 to `t_final`.
pub fn simulate_dispersive(
    cfg: &DispersiveConfig,
    rho0: &DensityMatrix,
    t_final: f64,
    samples: usize,
) -> Result<Vec<MomentSample>> {
    if !(t_final > 0.0) || samples == 0 {
        return Err(CqedError::InvalidArgument(
            "need t_final > 0 and at least one sample".into(),
        ));
    }
    let model = dispersive_generator(cfg)?;
    let x_op = position_operator(cfg)?;
    let p_op = momentum_operator(cfg)?;
    let p2_op = Operator::new(grid_space(cfg)?, momentum_function(cfg.grid, |k| k * k))?;

    let moment = |t: f64, rho: &DensityMatrix| -> Result<MomentSample> {
        Ok(MomentSample {
            t,
            x: rho.expectation(&x_op)?.re,
            p: rho.expectation(&p_op)?.re,
            p2: rho.expectation(&p2_op)?.re,
            energy: rho.expectation(&model.hamiltonian)?.re,
        })
    };

    let mut out = Vec::with_capacity(samples + 1);
    out.push(moment(0.0, rho0)?);
    let dt = t_final / samples as f64;
    let mut rho = rho0.clone();
    for k in 1..=samples {
        rho = evolve_lindblad_observed(
            &model,
            &rho,
            (k - 1) as f64 * dt,
            k as f64 * dt,
            cfg.tol,
            |_, _| {},
        )?;
        out.push(moment(k as f64 * dt, &rho)?);
    }
    Ok(out)
}

/// Momentum-diffusion rates: finite-difference `d⟨p²⟩/dt` from a short
/// evolution against the double-commutator identity
/// `d⟨p²⟩/dt|_jump = Γ ħ²k_L² ⟨sin²(2k_L x)⟩` (ħ = k_L = 1 here).
#[derive(Debug, Clone, Copy)]
pub struct HeatingCheck {
    pub numeric_rate: f64,
    pub ehrenfest_rate: f64,
}

pub fn heating_rate_check(
    cfg: &DispersiveConfig,
    rho: &DensityMatrix,
    tau: Option<f64>,
) -> Result<HeatingCheck> {
    let model = dispersive_generator(cfg)?;
    let gamma = cfg.scattering_rate();

    // ⟨sin²(2x)⟩ over the diagonal
    let mut s2 = 0.0;
    for (j, &x) in cfg.positions().iter().enumerate() {
        s2 += rho.matrix()[(j, j)].re * (2.0 * x).sin().powi(2);
    }
    let ehrenfest_rate = gamma * s2;

    // pick τ so both Γτ and ‖H‖τ stay ≪ 1
    let h_norm = linalg::one_norm(model.hamiltonian.matrix());
    let tau = tau.unwrap_or(1e-3 / (gamma + h_norm).max(1e-300));
    let p2_op = Operator::new(grid_space(cfg)?, momentum_function(cfg.grid, |k| k * k))?;
    let p2_0 = rho.expectation(&p2_op)?.re;
    let evolved = evolve_lindblad_observed(&model, rho, 0.0, tau, cfg.tol, |_, _| {})?;
    let p2_t = evolved.expectation(&p2_op)?.re;
    Ok(HeatingCheck { numeric_rate: (p2_t - p2_0) / tau, ehrenfest_rate })
}
