//! Cavity-QED quantum gate dynamics with quantized atomic motion.
//!
//! Two gate schemes between atoms coupled through a single cavity mode are
//! simulated with the atomic center-of-mass motion included as truncated
//! harmonic ladders: a Raman photon-exchange phase gate driven by timed
//! square pulses, and an adiabatic dark-state coherence transfer driven by
//! counterintuitively ordered Gaussian pulses. Closed-form fourth-order
//! Lamb-Dicke expressions for the exchange fidelity, gate entanglement
//! fidelity and motional heating live in [`perturbation`] for comparison
//! against the numerics. A separate 1D master-equation module covers the
//! far-detuned optical-potential regime with cavity-assisted light
//! scattering.
//!
//! Units: ħ = 1 and the coherent coupling g = 1 throughout; every rate is a
//! real number in units of g.

pub mod adiabatic;
pub mod dispersive;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod perturbation;
pub mod raman;

pub use error::{CqedError, Result};
pub use num_complex::Complex64 as C64;
