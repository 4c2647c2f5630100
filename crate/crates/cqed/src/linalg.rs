//! Small dense complex linear algebra kernels.
//!
//! Everything here works on `ndarray::Array2<Complex64>` and is sized for the
//! matrices this crate actually produces (a few thousand rows at most, and the
//! eigensolver is only called on a few hundred). No external LAPACK.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{CqedError, Result};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dag(a: &Array2<C64>) -> Array2<C64> {
    let (r, c) = a.dim();
    let mut out = Array2::zeros((c, r));
    for i in 0..r {
        for j in 0..c {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

/// Largest element modulus.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix 1-norm (max column absolute sum). Upper-bounds the spectral norm
/// for Hermitian matrices.
pub fn one_norm(a: &Array2<C64>) -> f64 {
    let (r, c) = a.dim();
    let mut best = 0.0_f64;
    for j in 0..c {
        let mut s = 0.0;
        for i in 0..r {
            s += a[(i, j)].norm();
        }
        best = best.max(s);
    }
    best
}

/// Max deviation from Hermiticity, `max |M - M†|`.
pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order and the matching
/// eigenvector columns (`a ≈ V diag(λ) V†`).
pub fn hermitian_eigen(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CqedError::InvalidDimension(format!(
            "hermitian_eigen needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = max_abs(a);
    if hermiticity_defect(a) > 1e-10 * scale.max(1.0) {
        return Err(CqedError::InvalidArgument(
            "hermitian_eigen called on a non-Hermitian matrix".into(),
        ));
    }

    let mut m = a.clone();
    let mut v: Array2<C64> = Array2::eye(n);
    if n == 1 {
        return Ok((Array1::from(vec![m[(0, 0)].re]), v));
    }

    let frob: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let stop = 1e-15 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            let mut vals: Vec<(f64, usize)> =
                (0..n).map(|i| (m[(i, i)].re, i)).collect();
            vals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let eig = Array1::from(vals.iter().map(|x| x.0).collect::<Vec<_>>());
            let mut vec = Array2::zeros((n, n));
            for (new_col, &(_, old_col)) in vals.iter().enumerate() {
                for r in 0..n {
                    vec[(r, new_col)] = v[(r, old_col)];
                }
            }
            return Ok((eig, vec));
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                // phase-rotate column q so the pivot becomes real, then a
                // real Givens rotation annihilates it
                let u = apq / r; // e^{i arg}
                let uc = u.conj();
                for k in 0..n {
                    let x = m[(k, q)] * uc;
                    m[(k, q)] = x;
                }
                for k in 0..n {
                    let x = m[(q, k)] * u;
                    m[(q, k)] = x;
                }
                for k in 0..n {
                    let x = v[(k, q)] * uc;
                    v[(k, q)] = x;
                }

                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let pivot = m[(p, q)].re; // == r up to roundoff
                let theta = (aqq - app) / (2.0 * pivot);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(CqedError::Convergence(
        "Jacobi eigensolver did not converge in 100 sweeps".into(),
    ))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &Array2<C64>) -> Result<f64> {
    let (vals, _) = hermitian_eigen(a)?;
    Ok(vals[0])
}

/// Apply a scalar function to a Hermitian matrix through its spectral
/// decomposition: `f(A) = V f(Λ) V†`.
pub fn hermitian_matrix_function(
    a: &Array2<C64>,
    f: impl Fn(f64) -> f64,
) -> Result<Array2<C64>> {
    let n = a.nrows();
    let (vals, vecs) = hermitian_eigen(a)?;
    let mut scaled = vecs.clone();
    for j in 0..n {
        let fj = C64::new(f(vals[j]), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    let out = scaled.dot(&dag(&vecs));
    // symmetrize away roundoff
    let mut h = out.clone();
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = 0.5 * (out[(i, j)] + out[(j, i)].conj());
        }
    }
    Ok(h)
}
