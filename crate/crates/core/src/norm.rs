//! Operator (spectral) norms.
//!
//! Small matrices go through a dense SVD. Above [`DENSE_SVD_LIMIT`] the
//! largest eigenvalue of `M^* M` is found by Lanczos with full
//! reorthogonalization, which needs only products with `M` and `M^*`.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::random;

pub const DENSE_SVD_LIMIT: usize = 512;

/// Relative stopping tolerance for the Krylov iteration.
pub const KRYLOV_TOL: f64 = 1e-13;

/// Anything that can be applied together with its adjoint.
pub trait LinearMap: Sync {
    fn ncols(&self) -> usize;
    fn nrows(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64>;
}

impl LinearMap for MatRef<'_, C64> {
    fn ncols(&self) -> usize {
        MatRef::ncols(self)
    }
    fn nrows(&self) -> usize {
        MatRef::nrows(self)
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        linalg::matvec(*self, x)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        linalg::matvec_adjoint(*self, y)
    }
}

/// Largest singular value of `m`.
pub fn operator_norm(m: MatRef<'_, C64>) -> Result<f64> {
    if !linalg::is_finite(m) {
        return Err(Error::NonFiniteMatrix);
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    if m.nrows().max(m.ncols()) <= DENSE_SVD_LIMIT {
        svd_norm(m)
    } else {
        Ok(krylov_norm(&m))
    }
}

pub fn svd_norm(m: MatRef<'_, C64>) -> Result<f64> {
    let s = m
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Largest singular value of a matrix-free map.
///
/// The start vector is drawn from a fixed seed so the result is reproducible.
pub fn krylov_norm(map: &dyn LinearMap) -> f64 {
    let n = map.ncols();
    if n == 0 {
        return 0.0;
    }
    let max_iter = n.min(400);
    let mut r = random::rng(0x5eed_0f_0a11);
    let mut q = random::random_vector(&mut r, n);
    let q_norm = linalg::vec_norm(&q);
    q.iter_mut().for_each(|v| *v /= q_norm);

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_iter);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut theta = 0.0;
    let mut prev_theta = f64::NAN;

    for it in 0..max_iter {
        let mut w = map.apply_adjoint(&map.apply(&q));
        let a = linalg::dot(&q, &w).re;
        basis.push(q);
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let proj = linalg::dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= bi * proj);
            }
        }
        let b_next = linalg::vec_norm(&w);

        let (top, last_comp) = tridiagonal_top(&alpha, &beta);
        theta = top;
        let residual = b_next * last_comp.abs();
        let converged = residual <= KRYLOV_TOL * theta.abs().max(f64::MIN_POSITIVE)
            || (it > 2 && (theta - prev_theta).abs() <= 1e-15 * theta.abs());
        if converged || b_next <= 1e-300 || it + 1 == max_iter {
            break;
        }
        prev_theta = theta;
        beta.push(b_next);
        q = w.into_iter().map(|v| v / b_next).collect();
    }
    theta.max(0.0).sqrt()
}

/// Top eigenvalue of the symmetric tridiagonal matrix and the last component
/// of its eigenvector.
fn tridiagonal_top(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .expect("tridiagonal eigensolver failed");
    let s = evd.S().column_vector();
    let mut best = 0;
    for i in 1..k {
        if s[i] > s[best] {
            best = i;
        }
    }
    (s[best], evd.U()[(k - 1, best)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_matrix;

    #[test]
    fn diagonal_norm() {
        let m = linalg::diagonal(&[1.0, -5.0, 2.0]);
        assert!((operator_norm(m.as_ref()).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_has_unit_norm() {
        let m = random_matrix(40, 9);
        let q = m.qr().compute_Q();
        assert!((operator_norm(q.as_ref()).unwrap() - 1.0).abs() < 1e-8);
        assert!((krylov_norm(&q.as_ref()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn krylov_matches_svd() {
        for seed in 0..4 {
            let m = random_matrix(64, seed);
            let a = svd_norm(m.as_ref()).unwrap();
            let b = krylov_norm(&m.as_ref());
            assert!(((a - b) / a).abs() < 1e-10, "seed {seed}: {a} vs {b}");
        }
    }

    #[test]
    fn rectangular_and_rank_one() {
        let u: Vec<C64> = (0..30).map(|i| C64::new(i as f64, 1.0)).collect();
        let m = Mat::from_fn(30, 30, |i, j| u[i] * u[j].conj());
        let expected = linalg::vec_norm(&u).powi(2);
        assert!(((krylov_norm(&m.as_ref()) - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_nan() {
        let mut m = linalg::identity(4);
        m[(1, 2)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(operator_norm(m.as_ref()), Err(Error::NonFiniteMatrix)));
    }
}
