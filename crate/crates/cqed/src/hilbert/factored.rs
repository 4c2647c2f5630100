//! Operators stored as sums of Kronecker products of per-factor matrices.
//!
//! The full matrix of a two-atom gate Hamiltonian runs to a few thousand
//! rows; applying it densely costs `O(D²)` per product. Every Hamiltonian
//! this crate builds is a short sum of terms `coeff · M_{f1} ⊗ M_{f2} ⊗ ...`
//! with identities on the remaining factors, which applies in
//! `O(D · Σ d_f)`. The propagators only ever see this form.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{CqedError, Result};
use crate::linalg;

use super::{Operator, StateVector, TensorSpace};

const ZERO: C64 = C64::new(0.0, 0.0);

struct ProductTerm {
    coeff: C64,
    /// (factor index, matrix), ascending in factor index, no repeats.
    factors: Vec<(usize, Array2<C64>)>,
    /// |coeff| · Π ‖M_f‖₁ — upper bound on the term's spectral norm.
    norm_bound: f64,
}

/// Sum of Kronecker-product terms on a fixed tensor space.
pub struct FactoredOp {
    space: TensorSpace,
    terms: Vec<ProductTerm>,
    strides: Vec<usize>,
}

impl FactoredOp {
    pub fn new(space: TensorSpace) -> Self {
        let strides = space.strides();
        Self { space, terms: Vec::new(), strides }
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    /// Add `coeff · ⊗_f M_f` (identity on unlisted factors).
    pub fn add_product(&mut self, coeff: C64, factors: Vec<(usize, Array2<C64>)>) -> Result<()> {
        let mut factors = factors;
        factors.sort_by_key(|(f, _)| *f);
        for w in factors.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CqedError::InvalidArgument(format!(
                    "factor {} listed twice in one product term",
                    w[0].0
                )));
            }
        }
        let mut norm_bound = coeff.norm();
        for (f, m) in &factors {
            if *f >= self.space.num_factors() {
                return Err(CqedError::InvalidArgument(format!(
                    "factor index {f} out of range ({} factors)",
                    self.space.num_factors()
                )));
            }
            let d = self.space.dim(*f);
            if m.dim() != (d, d) {
                return Err(CqedError::InvalidDimension(format!(
                    "factor {f} matrix is {:?}, expected {d}x{d}",
                    m.dim()
                )));
            }
            norm_bound *= linalg::one_norm(m);
        }
        self.terms.push(ProductTerm { coeff, factors, norm_bound });
        Ok(())
    }

    /// Add a Hermitian pair `coeff·P + conj(coeff)·P†` in one call.
    pub fn add_hermitian_pair(
        &mut self,
        coeff: C64,
        factors: Vec<(usize, Array2<C64>)>,
    ) -> Result<()> {
        let adjoints: Vec<(usize, Array2<C64>)> =
            factors.iter().map(|(f, m)| (*f, linalg::dag(m))).collect();
        self.add_product(coeff, factors)?;
        self.add_product(coeff.conj(), adjoints)
    }

    /// Upper bound on the operator norm (sum of term bounds).
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.norm_bound).sum()
    }

    /// `dst += scale · (self · src)`. `scratch` must both have the space
    /// dimension.
    pub fn apply_scaled_into(
        &self,
        scale: C64,
        src: &[C64],
        dst: &mut [C64],
        scratch: &mut (Vec<C64>, Vec<C64>),
    ) {
        let d = self.space.total_dim();
        debug_assert_eq!(src.len(), d);
        debug_assert_eq!(dst.len(), d);
        scratch.0.resize(d, ZERO);
        scratch.1.resize(d, ZERO);
        for term in &self.terms {
            let c = scale * term.coeff;
            if c == ZERO {
                continue;
            }
            match term.factors.len() {
                0 => {
                    for (y, x) in dst.iter_mut().zip(src) {
                        *y += c * x;
                    }
                }
                1 => {
                    let (f, m) = &term.factors[0];
                    apply_factor(m, self.space.dim(*f), self.strides[*f], src, &mut scratch.0);
                    for (y, x) in dst.iter_mut().zip(scratch.0.iter()) {
                        *y += c * x;
                    }
                }
                _ => {
                    let (f0, m0) = &term.factors[0];
                    apply_factor(m0, self.space.dim(*f0), self.strides[*f0], src, &mut scratch.0);
                    let mut cur = 0usize; // 0 -> scratch.0 holds current
                    for (f, m) in &term.factors[1..] {
                        let (a, b) = if cur == 0 {
                            let (s0, s1) = (&scratch.0, &mut scratch.1);
                            (s0.as_slice(), s1.as_mut_slice())
                        } else {
                            let (s1, s0) = (&scratch.1, &mut scratch.0);
                            (s1.as_slice(), s0.as_mut_slice())
                        };
                        apply_factor(m, self.space.dim(*f), self.strides[*f], a, b);
                        cur ^= 1;
                    }
                    let res = if cur == 0 { &scratch.0 } else { &scratch.1 };
                    for (y, x) in dst.iter_mut().zip(res.iter()) {
                        *y += c * x;
                    }
                }
            }
        }
    }

    /// Allocating convenience wrapper.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.space() != &self.space {
            return Err(CqedError::SpaceMismatch(
                "factored operator applied to state on a different space".into(),
            ));
        }
        let d = self.space.total_dim();
        let mut out = vec![ZERO; d];
        let mut scratch = (vec![ZERO; d], vec![ZERO; d]);
        let src = state.amplitudes().as_slice().expect("contiguous");
        self.apply_scaled_into(C64::new(1.0, 0.0), src, &mut out, &mut scratch);
        StateVector::new(self.space.clone(), out.into())
    }

    /// Materialize the dense matrix (for tests and small spaces).
    pub fn to_operator(&self) -> Operator {
        let d = self.space.total_dim();
        let mut m = Array2::zeros((d, d));
        for term in &self.terms {
            let mut full: Array2<C64> = Array2::eye(1);
            for f in 0..self.space.num_factors() {
                let df = self.space.dim(f);
                match term.factors.iter().find(|(g, _)| *g == f) {
                    Some((_, mf)) => full = linalg::kron(&full, mf),
                    None => full = linalg::kron(&full, &Array2::eye(df)),
                }
            }
            m = &m + &full.mapv(|z| term.coeff * z);
        }
        Operator::new(self.space.clone(), m).expect("dims agree by construction")
    }
}

/// `dst = (I ⊗ M ⊗ I) src` for one factor with the given dim and stride.
fn apply_factor(m: &Array2<C64>, dim: usize, stride: usize, src: &[C64], dst: &mut [C64]) {
    let total = src.len();
    let block = dim * stride;
    let mm = m.as_slice().expect("contiguous matrix");
    if stride == 1 {
        // trailing factor: rows of the block are single elements
        for base in (0..total).step_by(block) {
            let s = &src[base..base + dim];
            let d = &mut dst[base..base + dim];
            for (r, dr) in d.iter_mut().enumerate() {
                let row = &mm[r * dim..(r + 1) * dim];
                let mut acc = ZERO;
                for (a, x) in row.iter().zip(s) {
                    acc += a * x;
                }
                *dr = acc;
            }
        }
    } else {
        for base in (0..total).step_by(block) {
            for r in 0..dim {
                let row = &mm[r * dim..(r + 1) * dim];
                let out = &mut dst[base + r * stride..base + r * stride + stride];
                out.fill(ZERO);
                for (c, &a) in row.iter().enumerate() {
                    if a == ZERO {
                        continue;
                    }
                    let inp = &src[base + c * stride..base + c * stride + stride];
                    for (y, x) in out.iter_mut().zip(inp) {
                        *y += a * x;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fock_lowering, fock_number};
    use ndarray::Array1;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_state(space: &TensorSpace, seed: u64) -> StateVector {
        let mut rng = StdRng::seed_from_u64(seed);
        let amps: Array1<C64> = (0..space.total_dim())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        StateVector::new(space.clone(), amps).unwrap().normalized().unwrap()
    }

    #[test]
    fn factored_apply_matches_dense() {
        let space = TensorSpace::new(vec![2, 3, 4]).unwrap();
        let a = fock_lowering(4).unwrap();
        let n = fock_number(3).unwrap();
        let mut sx = Array2::zeros((2, 2));
        sx[(0, 1)] = C64::new(1.0, 0.0);
        sx[(1, 0)] = C64::new(1.0, 0.0);

        let mut op = FactoredOp::new(space.clone());
        op.add_hermitian_pair(
            C64::new(0.3, 0.1),
            vec![(0, sx.clone()), (2, a.matrix().clone())],
        )
        .unwrap();
        op.add_product(C64::new(0.7, 0.0), vec![(1, n.matrix().clone())]).unwrap();
        op.add_product(C64::new(-0.2, 0.0), vec![]).unwrap();

        let dense = op.to_operator();
        let psi = random_state(&space, 42);
        let fast = op.apply(&psi).unwrap();
        let slow = dense.apply(&psi).unwrap();
        let diff: f64 = fast
            .amplitudes()
            .iter()
            .zip(slow.amplitudes().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13, "apply mismatch {diff:e}");
    }

    #[test]
    fn norm_bound_dominates_spectral_norm() {
        let space = TensorSpace::new(vec![3, 3]).unwrap();
        let n = fock_number(3).unwrap();
        let mut op = FactoredOp::new(space);
        op.add_product(C64::new(1.5, 0.0), vec![(0, n.matrix().clone())]).unwrap();
        op.add_product(C64::new(0.5, 0.0), vec![(1, n.matrix().clone())]).unwrap();
        let dense = op.to_operator();
        let spectral = crate::linalg::one_norm(dense.matrix());
        assert!(op.norm_bound() + 1e-12 >= spectral);
    }

    #[test]
    fn rejects_duplicate_factor() {
        let space = TensorSpace::new(vec![2, 2]).unwrap();
        let eye: Array2<C64> = Array2::eye(2);
        let mut op = FactoredOp::new(space);
        let err = op.add_product(C64::new(1.0, 0.0), vec![(0, eye.clone()), (0, eye)]);
        assert!(err.is_err());
    }
}
