//! Time propagation.
//!
//! Schrödinger evolution uses an exponential mid-point rule: each accepted
//! step applies `exp(-i H(t_mid) Δt)` to the state, so the step propagator
//! is unitary to machine precision regardless of the step size. Step control
//! is by step doubling: the full step is compared against two half steps and
//! the pair is accepted when they agree to `tol` per unit time. Breakpoints
//! (pulse edges) are never straddled.
//!
//! The exponential action is evaluated by scaled Taylor summation; with a
//! Hermitian generator the series converges in a couple dozen terms per
//! unit of `‖H‖·Δt` and never amplifies roundoff beyond ~1e-15 per substep.
//!
//! The Lindblad equation is integrated by the same adaptive machinery acting
//! on the density matrix with the (time-independent) generator
//! `ρ̇ = -i[H,ρ] + Σ_k 2γ_k D[c_k]ρ`, where `D[c]ρ = cρc† - ½{c†c, ρ}`.
//! Note the factor of 2: a jump entry `(c, γ)` contributes `2γ D[c]`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{CqedError, Result};
use crate::hilbert::{DensityMatrix, FactoredOp, Operator, StateVector, TensorSpace};
use crate::linalg;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Per-substep phase budget for the Taylor exponential.
const EXPMV_THETA: f64 = 2.0;
const EXPMV_MAX_TERMS: usize = 64;
const MIN_STEP: f64 = 1e-12;

/// Hamiltonian of the form `H(t) = Σ_k c_k(t) · T_k` with piecewise-smooth
/// scalar envelopes and static factored operator terms.
pub struct TimeDependentHamiltonian {
    space: TensorSpace,
    terms: Vec<HamTerm>,
    breakpoints: Vec<f64>,
}

struct HamTerm {
    envelope: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    op: FactoredOp,
}

impl TimeDependentHamiltonian {
    pub fn new(space: TensorSpace) -> Self {
        Self { space, terms: Vec::new(), breakpoints: Vec::new() }
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    /// Add a term with a constant unit envelope.
    pub fn add_static(&mut self, op: FactoredOp) -> Result<()> {
        self.add_driven(op, |_| 1.0)
    }

    /// Add a term multiplied by the scalar envelope `c(t)`.
    pub fn add_driven(
        &mut self,
        op: FactoredOp,
        envelope: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<()> {
        if op.space() != &self.space {
            return Err(CqedError::SpaceMismatch(
                "hamiltonian term on a different space".into(),
            ));
        }
        self.terms.push(HamTerm { envelope: Box::new(envelope), op });
        Ok(())
    }

    /// Declare envelope discontinuities; the integrator will land on them.
    pub fn add_breakpoints(&mut self, pts: &[f64]) {
        self.breakpoints.extend_from_slice(pts);
        self.breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.breakpoints.dedup();
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `dst = H(t) src` (dst is overwritten).
    pub fn apply_at(
        &self,
        t: f64,
        src: &[C64],
        dst: &mut [C64],
        scratch: &mut (Vec<C64>, Vec<C64>),
    ) {
        dst.fill(ZERO);
        for term in &self.terms {
            let c = (term.envelope)(t);
            if c == 0.0 {
                continue;
            }
            term.op.apply_scaled_into(C64::new(c, 0.0), src, dst, scratch);
        }
    }

    /// Upper bound on `‖H(t)‖`.
    pub fn norm_bound_at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| (term.envelope)(t).abs() * term.op.norm_bound())
            .sum()
    }

    /// Materialized matrix at time `t` (tests, small spaces).
    pub fn dense_at(&self, t: f64) -> Operator {
        let d = self.space.total_dim();
        let mut m = Array2::<C64>::zeros((d, d));
        for term in &self.terms {
            let c = (term.envelope)(t);
            if c == 0.0 {
                continue;
            }
            let dense = term.op.to_operator();
            m = &m + &dense.matrix().mapv(|z| C64::new(c, 0.0) * z);
        }
        Operator::new(self.space.clone(), m).expect("dimensions agree")
    }

    /// Hermiticity check at the sampled times (relative 1e-12 on the dense
    /// matrix). Intended for construction-time validation on small spaces.
    pub fn check_hermitian_at(&self, times: &[f64]) -> Result<()> {
        for &t in times {
            if !self.dense_at(t).is_hermitian(1e-12) {
                return Err(CqedError::InvariantViolation(format!(
                    "hamiltonian is not Hermitian at t = {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Workspace for the Taylor exponential action.
struct ExpWork {
    term: Vec<C64>,
    hterm: Vec<C64>,
    acc: Vec<C64>,
    scratch: (Vec<C64>, Vec<C64>),
}

impl ExpWork {
    fn new(d: usize) -> Self {
        Self {
            term: vec![ZERO; d],
            hterm: vec![ZERO; d],
            acc: vec![ZERO; d],
            scratch: (vec![ZERO; d], vec![ZERO; d]),
        }
    }
}

fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `v ← exp(scale · H(t_sample)) v` via Taylor summation with substeps
/// chosen so each substep has phase mass at most `EXPMV_THETA`.
fn expmv_at(
    h: &TimeDependentHamiltonian,
    t_sample: f64,
    scale: C64,
    v: &mut [C64],
    w: &mut ExpWork,
) -> Result<()> {
    let mass = h.norm_bound_at(t_sample) * scale.norm();
    let substeps = (mass / EXPMV_THETA).ceil().max(1.0) as usize;
    let frac = scale / substeps as f64;
    for _ in 0..substeps {
        w.acc.copy_from_slice(v);
        w.term.copy_from_slice(v);
        let mut converged = false;
        for k in 1..=EXPMV_MAX_TERMS {
            h.apply_at(t_sample, &w.term, &mut w.hterm, &mut w.scratch);
            let f = frac / k as f64;
            for (t, ht) in w.term.iter_mut().zip(&w.hterm) {
                *t = f * ht;
            }
            for (a, t) in w.acc.iter_mut().zip(&w.term) {
                *a += t;
            }
            if l2_norm(&w.term) <= 1e-16 * l2_norm(&w.acc) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(CqedError::Convergence(
                "exponential Taylor series did not converge".into(),
            ));
        }
        v.copy_from_slice(&w.acc);
    }
    Ok(())
}

fn next_breakpoint(bps: &[f64], t: f64, t1: f64) -> f64 {
    for &b in bps {
        if b > t + 1e-13 && b < t1 - 1e-13 {
            return b;
        }
    }
    t1
}

/// Solve `i dψ/dt = H(t) ψ` from `t0` to `t1` with local error ≤ `tol` per
/// unit time.
pub fn evolve_tdse(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<StateVector> {
    evolve_tdse_observed(h, psi0, t0, t1, tol, |_, _| {})
}

/// Like [`evolve_tdse`] but invokes `observe(t, amplitudes)` after every
/// accepted step (and once at `t0`).
pub fn evolve_tdse_observed(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    tol: f64,
    mut observe: impl FnMut(f64, &[C64]),
) -> Result<StateVector> {
    if !(t1 > t0) {
        return Err(CqedError::InvalidArgument(format!(
            "need t1 > t0, got t0 = {t0}, t1 = {t1}"
        )));
    }
    if psi0.space() != h.space() {
        return Err(CqedError::SpaceMismatch("state vs hamiltonian".into()));
    }
    if (psi0.norm() - 1.0).abs() > 1e-6 {
        return Err(CqedError::InvalidArgument("psi0 is not normalized".into()));
    }
    if !(tol > 0.0) {
        return Err(CqedError::InvalidArgument("tol must be positive".into()));
    }

    let d = h.space().total_dim();
    let mut psi: Vec<C64> = psi0.amplitudes().to_vec();
    let mut full = vec![ZERO; d];
    let mut half = vec![ZERO; d];
    let mut work = ExpWork::new(d);

    observe(t0, &psi);

    let span = t1 - t0;
    let mut t = t0;
    let mut dt = span / 64.0;
    while t < t1 - 1e-13 * span.max(1.0) {
        let limit = next_breakpoint(h.breakpoints(), t, t1);
        let step = dt.min(limit - t);

        full.copy_from_slice(&psi);
        expmv_at(h, t + 0.5 * step, C64::new(0.0, -step), &mut full, &mut work)?;

        half.copy_from_slice(&psi);
        expmv_at(h, t + 0.25 * step, C64::new(0.0, -0.5 * step), &mut half, &mut work)?;
        expmv_at(h, t + 0.75 * step, C64::new(0.0, -0.5 * step), &mut half, &mut work)?;

        let err: f64 = full
            .iter()
            .zip(&half)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();

        // the 1e-14 floor keeps roundoff noise from stalling short windows
        let target = tol * step + 1e-14;
        if err <= target {
            psi.copy_from_slice(&half);
            t += step;
            observe(t, &psi);
            let grow = if err > 0.0 {
                (0.9 * (target / err).powf(1.0 / 3.0)).clamp(1.0, 2.0)
            } else {
                2.0
            };
            dt = (step * grow).min(span);
        } else {
            let shrink = (0.9 * (target / err).powf(1.0 / 3.0)).clamp(0.1, 0.9);
            dt = step * shrink;
            if dt < MIN_STEP {
                return Err(CqedError::StepUnderflow { t, h: dt });
            }
        }
    }

    let result = StateVector::new(h.space().clone(), psi.into())?;
    let drift = (result.norm() - 1.0).abs();
    if drift > 1e-9 {
        return Err(CqedError::InvariantViolation(format!(
            "norm drift {drift:e} exceeds 1e-9"
        )));
    }
    Ok(result)
}

/// Fixed Hamiltonian plus jump operators with nonnegative rates. A jump
/// entry `(c, γ)` enters the master equation as `2γ D[c]ρ`.
pub struct LindbladModel {
    pub hamiltonian: Operator,
    pub jumps: Vec<(Operator, f64)>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Operator, jumps: Vec<(Operator, f64)>) -> Result<Self> {
        for (c, rate) in &jumps {
            if c.space() != hamiltonian.space() {
                return Err(CqedError::SpaceMismatch("jump operator space".into()));
            }
            if !(*rate >= 0.0) {
                return Err(CqedError::InvalidArgument(format!(
                    "jump rates must be nonnegative, got {rate}"
                )));
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    /// `L(ρ) = -i[H,ρ] + Σ 2γ (cρc† - ½{c†c, ρ})`.
    fn generator(&self, rho: &Array2<C64>, cache: &LindbladCache) -> Array2<C64> {
        let hm = self.hamiltonian.matrix();
        let mut out = hm.dot(rho);
        let rh = rho.dot(hm);
        out.zip_mut_with(&rh, |a, &b| *a = C64::new(0.0, -1.0) * (*a - b));
        for ((c, rate), cdc) in self.jumps.iter().zip(&cache.cdagc) {
            if *rate == 0.0 {
                continue;
            }
            let cm = c.matrix();
            let jump = cm.dot(rho).dot(&cache_dag(cm));
            let anti = cdc.dot(rho) + rho.dot(cdc);
            let g = C64::new(2.0 * rate, 0.0);
            out.zip_mut_with(&jump, |a, &b| *a += g * b);
            out.zip_mut_with(&anti, |a, &b| *a -= 0.5 * g * b);
        }
        out
    }

    fn norm_bound(&self, cache: &LindbladCache) -> f64 {
        let mut s = 2.0 * linalg::one_norm(self.hamiltonian.matrix());
        for ((c, rate), cdc) in self.jumps.iter().zip(&cache.cdagc) {
            let cn = linalg::one_norm(c.matrix());
            s += 2.0 * rate * (cn * cn + linalg::one_norm(cdc));
        }
        s
    }
}

fn cache_dag(m: &Array2<C64>) -> Array2<C64> {
    linalg::dag(m)
}

struct LindbladCache {
    cdagc: Vec<Array2<C64>>,
}

/// Integrate the master equation from `t0` to `t1`. The trace is checked to
/// 1e-8 and the state is symmetrized every accepted step; the final state
/// must have no eigenvalue below -1e-7.
pub fn evolve_lindblad(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<DensityMatrix> {
    evolve_lindblad_observed(model, rho0, t0, t1, tol, |_, _| {})
}

/// Like [`evolve_lindblad`] with a per-accepted-step observer.
pub fn evolve_lindblad_observed(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    tol: f64,
    mut observe: impl FnMut(f64, &Array2<C64>),
) -> Result<DensityMatrix> {
    if !(t1 > t0) {
        return Err(CqedError::InvalidArgument("need t1 > t0".into()));
    }
    if rho0.space() != model.hamiltonian.space() {
        return Err(CqedError::SpaceMismatch("state vs model".into()));
    }
    let tr0 = rho0.trace();
    if (tr0.re - 1.0).abs() > 1e-8 {
        return Err(CqedError::InvalidArgument("rho0 must have unit trace".into()));
    }

    let cache = LindbladCache {
        cdagc: model
            .jumps
            .iter()
            .map(|(c, _)| linalg::dag(c.matrix()).dot(c.matrix()))
            .collect(),
    };
    let gen_norm = model.norm_bound(&cache);

    let mut rho = rho0.matrix().clone();
    observe(t0, &rho);

    let span = t1 - t0;
    let mut t = t0;
    let mut dt = span / 64.0;
    while t < t1 - 1e-13 * span.max(1.0) {
        let step = dt.min(t1 - t);
        let full = expm_generator(model, &cache, gen_norm, &rho, step)?;
        let half1 = expm_generator(model, &cache, gen_norm, &rho, 0.5 * step)?;
        let half2 = expm_generator(model, &cache, gen_norm, &half1, 0.5 * step)?;

        let err: f64 = full
            .iter()
            .zip(half2.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();

        let target = tol * step + 1e-14;
        if err <= target {
            rho = half2;
            // enforce Hermiticity against roundoff
            let rd = linalg::dag(&rho);
            rho.zip_mut_with(&rd, |a, &b| *a = 0.5 * (*a + b));
            t += step;
            let tr: C64 = rho.diag().iter().sum();
            if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
                return Err(CqedError::InvariantViolation(format!(
                    "trace drifted to {tr} at t = {t}"
                )));
            }
            observe(t, &rho);
            let grow = if err > 0.0 {
                (0.9 * (target / err).powf(1.0 / 3.0)).clamp(1.0, 2.0)
            } else {
                2.0
            };
            dt = (step * grow).min(span);
        } else {
            let shrink = (0.9 * (target / err).powf(1.0 / 3.0)).clamp(0.1, 0.9);
            dt = step * shrink;
            if dt < MIN_STEP {
                return Err(CqedError::StepUnderflow { t, h: dt });
            }
        }
    }

    let out = DensityMatrix::new(model.hamiltonian.space().clone(), rho)?;
    let min_eig = out.min_eigenvalue()?;
    if min_eig < -1e-7 {
        return Err(CqedError::InvariantViolation(format!(
            "density matrix eigenvalue {min_eig:e} below -1e-7"
        )));
    }
    Ok(out)
}

fn frob(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(Δt · L) ρ` by Taylor substeps. The substep count comes from the
/// measured action of the generator on the state (the worst-case operator
/// norm wildly overestimates it for smooth states on fine grids); if a
/// substep's series stalls the count is doubled and the substep retried.
fn expm_generator(
    model: &LindbladModel,
    cache: &LindbladCache,
    gen_norm: f64,
    rho: &Array2<C64>,
    dt: f64,
) -> Result<Array2<C64>> {
    // measured first- and second-iterate norms catch the transient hump
    let n0 = frob(rho).max(f64::MIN_POSITIVE);
    let l1 = model.generator(rho, cache);
    let m1 = frob(&l1) / n0;
    let l2 = model.generator(&l1, cache);
    let m2 = (frob(&l2) / n0).sqrt();
    let mass = (1.2 * m1.max(m2) * dt).min(gen_norm * dt);

    let mut remaining = (mass / EXPMV_THETA).ceil().max(1.0) as usize;
    let mut t_left = dt;
    let mut cur = rho.clone();
    'outer: loop {
        if t_left <= 0.0 {
            return Ok(cur);
        }
        let frac = t_left / remaining as f64;
        let mut acc = cur.clone();
        let mut term = cur.clone();
        let cur_norm = frob(&cur).max(f64::MIN_POSITIVE);
        for k in 1..=EXPMV_MAX_TERMS {
            let lt = model.generator(&term, cache);
            let f = C64::new(frac / k as f64, 0.0);
            term = lt.mapv(|z| f * z);
            acc.zip_mut_with(&term, |a, &b| *a += b);
            let tn = frob(&term);
            if tn <= 1e-16 * frob(&acc) {
                cur = acc;
                t_left -= frac;
                remaining = remaining.saturating_sub(1).max(1);
                continue 'outer;
            }
            if tn > 1e4 * cur_norm {
                break; // runaway hump: the substep is too long
            }
        }
        // did not converge: halve the substep
        remaining = remaining.saturating_mul(2).max(2);
        if t_left / (remaining as f64) < 1e-300 {
            return Err(CqedError::Convergence(
                "Lindblad exponential series did not converge".into(),
            ));
        }
    }
}
