//! Truncated Fock-space and tensor-product algebra.
//!
//! A [`TensorSpace`] is an ordered list of subsystem dimensions. States and
//! operators carry their space and refuse to combine across mismatched
//! spaces. Everything is dense and immutable after construction.

mod factored;

pub use factored::FactoredOp;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{CqedError, Result};
use crate::linalg;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Ordered list of subsystem dimensions defining a truncated composite
/// Hilbert space. Kronecker / index ordering is row-major in the listed
/// order (the first factor varies slowest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpace {
    dims: Vec<usize>,
}

impl TensorSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(CqedError::InvalidDimension(
                "tensor space needs at least one factor".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(CqedError::InvalidDimension(
                "subsystem dimensions must be positive".into(),
            ));
        }
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, factor: usize) -> usize {
        self.dims[factor]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides: `index = Σ_f level_f · stride_f`.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut s = vec![1usize; n];
        for f in (0..n.saturating_sub(1)).rev() {
            s[f] = s[f + 1] * self.dims[f + 1];
        }
        s
    }

    /// Flat index of a product basis state given per-factor levels.
    pub fn basis_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(CqedError::InvalidArgument(format!(
                "expected {} levels, got {}",
                self.dims.len(),
                levels.len()
            )));
        }
        let mut idx = 0usize;
        for (f, (&l, &d)) in levels.iter().zip(&self.dims).enumerate() {
            if l >= d {
                return Err(CqedError::InvalidArgument(format!(
                    "level {l} out of range for factor {f} (dim {d})"
                )));
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    /// Per-factor levels of a flat index.
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.dims.len()];
        for f in (0..self.dims.len()).rev() {
            out[f] = index % self.dims[f];
            index /= self.dims[f];
        }
        out
    }

    fn check_same(&self, other: &TensorSpace, what: &str) -> Result<()> {
        if self != other {
            return Err(CqedError::SpaceMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

/// Dense operator tagged with its tensor space.
#[derive(Debug, Clone)]
pub struct Operator {
    space: TensorSpace,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn new(space: TensorSpace, matrix: Array2<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.dim() != (d, d) {
            return Err(CqedError::InvalidDimension(format!(
                "matrix is {:?}, space dimension is {d}",
                matrix.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: TensorSpace) -> Self {
        let d = space.total_dim();
        Self { space, matrix: Array2::eye(d) }
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: linalg::dag(&self.matrix) }
    }

    /// Hermiticity test relative to the largest element.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let scale = linalg::max_abs(&self.matrix).max(f64::MIN_POSITIVE);
        linalg::hermiticity_defect(&self.matrix) <= rel_tol * scale
    }

    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        self.space.check_same(&rhs.space, "operator product")?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: self.matrix.dot(&rhs.matrix),
        })
    }

    pub fn add(&self, rhs: &Operator) -> Result<Operator> {
        self.space.check_same(&rhs.space, "operator sum")?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        })
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator { space: self.space.clone(), matrix: self.matrix.mapv(|z| c * z) }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.space.check_same(&state.space, "operator application")?;
        Ok(StateVector {
            space: self.space.clone(),
            amplitudes: self.matrix.dot(&state.amplitudes),
        })
    }

    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        let applied = self.apply(state)?;
        state.inner(&applied)
    }
}

/// Pure state on a tensor space.
#[derive(Debug, Clone)]
pub struct StateVector {
    space: TensorSpace,
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn new(space: TensorSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(CqedError::InvalidDimension(format!(
                "amplitude vector has length {}, space dimension is {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn from_amplitudes(space: &TensorSpace, amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(space.clone(), Array1::from(amplitudes))
    }

    /// Product basis state `|levels[0], levels[1], ...⟩`.
    pub fn basis_state(space: &TensorSpace, levels: &[usize]) -> Result<Self> {
        let idx = space.basis_index(levels)?;
        let mut amps = Array1::zeros(space.total_dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { space: space.clone(), amplitudes: amps })
    }

    pub fn zeros(space: &TensorSpace) -> Self {
        Self { space: space.clone(), amplitudes: Array1::zeros(space.total_dim()) }
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut Array1<C64> {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(CqedError::InvalidArgument(
                "cannot normalize a zero-norm state".into(),
            ));
        }
        let inv = C64::new(1.0 / n, 0.0);
        Ok(Self {
            space: self.space.clone(),
            amplitudes: self.amplitudes.mapv(|z| inv * z),
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.space.check_same(&other.space, "inner product")?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        self.space.check_same(&other.space, "state sum")?;
        Ok(StateVector {
            space: self.space.clone(),
            amplitudes: &self.amplitudes + &other.amplitudes,
        })
    }

    pub fn scale(&self, c: C64) -> StateVector {
        StateVector {
            space: self.space.clone(),
            amplitudes: self.amplitudes.mapv(|z| c * z),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let d = self.space.total_dim();
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { space: self.space.clone(), matrix: m }
    }

    /// Reduced density matrix over the `keep` factors (ascending order kept).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (keep, env) = split_factors(&self.space, keep)?;
        let keep_space = TensorSpace::new(keep.iter().map(|&f| self.space.dim(f)).collect())?;
        let dk = keep_space.total_dim();
        let de: usize = env.iter().map(|&f| self.space.dim(f)).product();

        let strides = self.space.strides();
        let keep_strides: Vec<usize> = keep.iter().map(|&f| strides[f]).collect();
        let env_strides: Vec<usize> = env.iter().map(|&f| strides[f]).collect();
        let keep_dims: Vec<usize> = keep.iter().map(|&f| self.space.dim(f)).collect();
        let env_dims: Vec<usize> = env.iter().map(|&f| self.space.dim(f)).collect();

        let keep_offsets = flat_offsets(&keep_dims, &keep_strides, dk);
        let env_offsets = flat_offsets(&env_dims, &env_strides, de);

        let mut rho = Array2::zeros((dk, dk));
        let amps = self.amplitudes.as_slice().expect("contiguous");
        for (i, &oi) in keep_offsets.iter().enumerate() {
            for (j, &oj) in keep_offsets.iter().enumerate() {
                let mut acc = ZERO;
                for &oe in &env_offsets {
                    acc += amps[oi + oe] * amps[oj + oe].conj();
                }
                rho[(i, j)] = acc;
            }
        }
        Ok(DensityMatrix { space: keep_space, matrix: rho })
    }
}

/// Mixed state on a tensor space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: TensorSpace,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(space: TensorSpace, matrix: Array2<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.dim() != (d, d) {
            return Err(CqedError::InvalidDimension(format!(
                "matrix is {:?}, space dimension is {d}",
                matrix.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        state.to_density()
    }

    /// Thermal (geometric) mixture of Fock states on a single-factor space.
    pub fn thermal(space: &TensorSpace, spec: &ThermalSpec) -> Result<Self> {
        if space.num_factors() != 1 {
            return Err(CqedError::InvalidArgument(
                "thermal state constructor expects a single-factor space".into(),
            ));
        }
        let w = thermal_weights(spec)?;
        if w.weights.len() > space.total_dim() {
            return Err(CqedError::InvalidDimension(format!(
                "thermal cutoff {} exceeds space dimension {}",
                spec.cutoff,
                space.total_dim()
            )));
        }
        let d = space.total_dim();
        let mut m = Array2::zeros((d, d));
        for (n, &p) in w.weights.iter().enumerate() {
            m[(n, n)] = C64::new(p, 0.0);
        }
        Ok(Self { space: space.clone(), matrix: m })
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        (0..self.space.total_dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.dot(&self.matrix).diag().iter().map(|z| z.re).sum()
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        self.space.check_same(&op.space, "expectation")?;
        let prod = op.matrix.dot(&self.matrix);
        Ok(prod.diag().iter().sum())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        linalg::min_eigenvalue(&self.matrix)
    }

    /// Check the density-matrix invariants: Hermitian, unit trace (1e-8),
    /// smallest eigenvalue above -1e-9.
    pub fn validate(&self) -> Result<()> {
        let scale = linalg::max_abs(&self.matrix).max(f64::MIN_POSITIVE);
        if linalg::hermiticity_defect(&self.matrix) > 1e-9 * scale {
            return Err(CqedError::InvariantViolation("density matrix not Hermitian".into()));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(CqedError::InvariantViolation(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let lam = self.min_eigenvalue()?;
        if lam < -1e-9 {
            return Err(CqedError::InvariantViolation(format!(
                "density matrix has negative eigenvalue {lam:e}"
            )));
        }
        Ok(())
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (keep, env) = split_factors(&self.space, keep)?;
        let keep_space = TensorSpace::new(keep.iter().map(|&f| self.space.dim(f)).collect())?;
        let dk = keep_space.total_dim();
        let de: usize = env.iter().map(|&f| self.space.dim(f)).product();

        let strides = self.space.strides();
        let keep_offsets = flat_offsets(
            &keep.iter().map(|&f| self.space.dim(f)).collect::<Vec<_>>(),
            &keep.iter().map(|&f| strides[f]).collect::<Vec<_>>(),
            dk,
        );
        let env_offsets = flat_offsets(
            &env.iter().map(|&f| self.space.dim(f)).collect::<Vec<_>>(),
            &env.iter().map(|&f| strides[f]).collect::<Vec<_>>(),
            de,
        );

        let mut rho = Array2::zeros((dk, dk));
        for (i, &oi) in keep_offsets.iter().enumerate() {
            for (j, &oj) in keep_offsets.iter().enumerate() {
                let mut acc = ZERO;
                for &oe in &env_offsets {
                    acc += self.matrix[(oi + oe, oj + oe)];
                }
                rho[(i, j)] = acc;
            }
        }
        Ok(DensityMatrix { space: keep_space, matrix: rho })
    }
}

fn split_factors(space: &TensorSpace, keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if keep.is_empty() {
        return Err(CqedError::InvalidArgument("keep set must be nonempty".into()));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&f| f >= space.num_factors()) {
        return Err(CqedError::InvalidArgument(format!(
            "factor index {bad} out of range ({} factors)",
            space.num_factors()
        )));
    }
    let env: Vec<usize> =
        (0..space.num_factors()).filter(|f| !keep.contains(f)).collect();
    Ok((keep, env))
}

/// Flat offsets of every combination of the given factor levels,
/// enumerated row-major over `dims`.
fn flat_offsets(dims: &[usize], strides: &[usize], total: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(total);
    let mut levels = vec![0usize; dims.len()];
    loop {
        let off: usize = levels.iter().zip(strides).map(|(&l, &s)| l * s).sum();
        out.push(off);
        // odometer increment
        let mut f = dims.len();
        loop {
            if f == 0 {
                return out;
            }
            f -= 1;
            levels[f] += 1;
            if levels[f] < dims[f] {
                break;
            }
            levels[f] = 0;
        }
    }
}

/// Thermal occupation spec: mean occupation and Fock cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSpec {
    pub nbar: f64,
    pub cutoff: usize,
}

impl ThermalSpec {
    pub fn ground() -> Self {
        Self { nbar: 0.0, cutoff: 0 }
    }
}

/// Renormalized geometric weights plus the raw retained weight.
#[derive(Debug, Clone)]
pub struct ThermalWeights {
    pub weights: Vec<f64>,
    pub retained: f64,
}

/// Geometric distribution `p_n = n̄^n / (1+n̄)^{n+1}` up to the cutoff,
/// renormalized to sum 1. Errors if the raw retained weight is below
/// `1 - 1e-6` (the cutoff is too small for this n̄).
pub fn thermal_weights(spec: &ThermalSpec) -> Result<ThermalWeights> {
    if !(spec.nbar >= 0.0) {
        return Err(CqedError::InvalidArgument(format!(
            "nbar must be nonnegative, got {}",
            spec.nbar
        )));
    }
    let mut w = Vec::with_capacity(spec.cutoff + 1);
    if spec.nbar == 0.0 {
        w.push(1.0);
        w.extend(std::iter::repeat(0.0).take(spec.cutoff));
        return Ok(ThermalWeights { weights: w, retained: 1.0 });
    }
    let ratio = spec.nbar / (1.0 + spec.nbar);
    let mut p = 1.0 / (1.0 + spec.nbar);
    for _ in 0..=spec.cutoff {
        w.push(p);
        p *= ratio;
    }
    let retained: f64 = w.iter().sum();
    if retained < 1.0 - 1e-6 {
        return Err(CqedError::Convergence(format!(
            "thermal cutoff {} retains only {retained:.9} of the weight at n̄ = {}; \
             increase the cutoff",
            spec.cutoff, spec.nbar
        )));
    }
    for x in &mut w {
        *x /= retained;
    }
    Ok(ThermalWeights { weights: w, retained })
}

/// Fock lowering operator: `⟨n-1|A|n⟩ = √n`.
pub fn fock_lowering(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(CqedError::InvalidDimension(format!(
            "fock_lowering needs dim ≥ 2, got {dim}"
        )));
    }
    let space = TensorSpace::single(dim)?;
    let mut m = Array2::zeros((dim, dim));
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(space, m)
}

/// Fock number operator `A†A` (diagonal 0..dim-1).
pub fn fock_number(dim: usize) -> Result<Operator> {
    if dim < 1 {
        return Err(CqedError::InvalidDimension("fock_number needs dim ≥ 1".into()));
    }
    let space = TensorSpace::single(dim)?;
    let mut m = Array2::zeros((dim, dim));
    for n in 0..dim {
        m[(n, n)] = C64::new(n as f64, 0.0);
    }
    Operator::new(space, m)
}

/// Embed a single-factor operator at `index` of a larger space, identity on
/// all other factors.
pub fn tensor_embed(op: &Operator, index: usize, space: &TensorSpace) -> Result<Operator> {
    if index >= space.num_factors() {
        return Err(CqedError::InvalidArgument(format!(
            "factor index {index} out of range ({} factors)",
            space.num_factors()
        )));
    }
    if op.space.total_dim() != space.dim(index) {
        return Err(CqedError::InvalidDimension(format!(
            "operator dimension {} does not match factor {index} (dim {})",
            op.space.total_dim(),
            space.dim(index)
        )));
    }
    let left: usize = space.dims()[..index].iter().product();
    let right: usize = space.dims()[index + 1..].iter().product();
    let eye_l = Array2::eye(left);
    let eye_r = Array2::eye(right);
    let m = linalg::kron(&linalg::kron(&eye_l, &op.matrix), &eye_r);
    Operator::new(space.clone(), m)
}

/// Top-left `dim × dim` block of `cos(η(A + A†))`, computed by spectral
/// decomposition of the quadrature on a guard-extended space. The block is
/// computed at `guard` and `2·guard` extra levels and the two must agree to
/// 1e-10 elementwise, otherwise the truncation has not converged.
pub fn cosine_displacement(eta: f64, dim: usize, guard: usize) -> Result<Operator> {
    if !(eta >= 0.0) {
        return Err(CqedError::InvalidArgument(format!("eta must be ≥ 0, got {eta}")));
    }
    if dim < 1 {
        return Err(CqedError::InvalidDimension("cosine_displacement needs dim ≥ 1".into()));
    }
    if guard < 10 {
        return Err(CqedError::InvalidArgument(format!(
            "guard must be ≥ 10, got {guard}"
        )));
    }
    let coarse = cosine_block(eta, dim, dim + guard)?;
    let fine = cosine_block(eta, dim, dim + 2 * guard)?;
    let diff = linalg::max_abs(&(&fine - &coarse));
    if diff > 1e-10 {
        return Err(CqedError::Convergence(format!(
            "cosine_displacement block changed by {diff:.3e} when the guard was \
             doubled (eta = {eta}, dim = {dim}, guard = {guard})"
        )));
    }
    let space = TensorSpace::single(dim)?;
    Operator::new(space, fine)
}

fn cosine_block(eta: f64, dim: usize, full: usize) -> Result<Array2<C64>> {
    // quadrature X = A + A† on the extended space
    let mut x = Array2::zeros((full, full));
    for n in 1..full {
        let v = C64::new((n as f64).sqrt(), 0.0);
        x[(n - 1, n)] = v;
        x[(n, n - 1)] = v;
    }
    let c = linalg::hermitian_matrix_function(&x, |lam| (eta * lam).cos())?;
    let mut block = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            block[(i, j)] = c[(i, j)];
        }
    }
    Ok(block)
}

/// Identifies the reference factor and the two qubit-carrying factors of a
/// purification space for the gate entanglement fidelity. The first two
/// levels of each qubit factor are the computational levels; basis order is
/// `|q1 q2⟩ = |00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Debug, Clone, Copy)]
pub struct ComputationalEmbedding {
    pub reference_factor: usize,
    pub qubit_factors: [usize; 2],
}

/// Gate entanglement fidelity of a (possibly thermally averaged) ensemble of
/// evolved purification states against an ideal 4×4 gate unitary:
/// `F_eg = Σ_k w_k ⟨Φ_U| Tr_env(|Ψ_k⟩⟨Ψ_k|) |Φ_U⟩` with
/// `|Φ_U⟩ = (I ⊗ U)|Φ⟩` and `|Φ⟩ = ½ Σ_i |i⟩_R |i⟩_C`.
pub fn gate_entanglement_fidelity(
    final_states: &[StateVector],
    weights: &[f64],
    embedding: &ComputationalEmbedding,
    ideal: &Array2<C64>,
) -> Result<f64> {
    if final_states.is_empty() || final_states.len() != weights.len() {
        return Err(CqedError::InvalidArgument(
            "need one weight per final state".into(),
        ));
    }
    let wsum: f64 = weights.iter().sum();
    if (wsum - 1.0).abs() > 1e-9 {
        return Err(CqedError::InvalidArgument(format!(
            "weights sum to {wsum}, expected 1"
        )));
    }
    if ideal.dim() != (4, 4) {
        return Err(CqedError::InvalidDimension(
            "ideal gate must be 4×4 on the computational subspace".into(),
        ));
    }

    let space = final_states[0].space().clone();
    let rf = embedding.reference_factor;
    let [q1, q2] = embedding.qubit_factors;
    if space.dim(rf) != 4 {
        return Err(CqedError::InvalidDimension(
            "reference factor must have dimension 4".into(),
        ));
    }
    if space.dim(q1) < 2 || space.dim(q2) < 2 {
        return Err(CqedError::InvalidDimension(
            "qubit factors must have dimension ≥ 2".into(),
        ));
    }

    // reduced space keeps {R, q1, q2} in ascending factor order
    let mut keep = vec![rf, q1, q2];
    keep.sort_unstable();
    let pos_r = keep.iter().position(|&f| f == rf).unwrap();
    let pos_q1 = keep.iter().position(|&f| f == q1).unwrap();
    let pos_q2 = keep.iter().position(|&f| f == q2).unwrap();

    let mut fidelity = 0.0;
    let mut phi_u: Option<StateVector> = None;
    for (state, &w) in final_states.iter().zip(weights) {
        state.space().check_same(&space, "gate fidelity ensemble")?;
        let rho = state.partial_trace(&keep)?;
        let phi = phi_u.get_or_insert_with(|| {
            let rspace = rho.space().clone();
            let mut amps = Array1::zeros(rspace.total_dim());
            for i in 0..4usize {
                for j in 0..4usize {
                    let u = ideal[(j, i)];
                    if u == ZERO {
                        continue;
                    }
                    let (c1, c2) = ((j >> 1) & 1, j & 1);
                    let mut levels = vec![0usize; 3];
                    levels[pos_r] = i;
                    levels[pos_q1] = c1;
                    levels[pos_q2] = c2;
                    let idx = rspace.basis_index(&levels).expect("in range");
                    amps[idx] += 0.5 * u;
                }
            }
            StateVector { space: rspace, amplitudes: amps }
        });
        // F_k = ⟨Φ_U| ρ |Φ_U⟩
        let rho_phi = rho.matrix().dot(phi.amplitudes());
        let f: C64 = phi
            .amplitudes()
            .iter()
            .zip(rho_phi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        fidelity += w * f.re;
    }
    Ok(fidelity)
}
