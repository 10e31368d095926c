//! Seeded random matrices for diagnostics and tests.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn entry(r: &mut impl Rng) -> C64 {
    C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

pub fn random_matrix_with(r: &mut impl Rng, rows: usize, cols: usize) -> Mat<C64> {
    let mut m = Mat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = entry(r);
        }
    }
    m
}

pub fn random_matrix(n: usize, seed: u64) -> Mat<C64> {
    random_matrix_with(&mut rng(seed), n, n)
}

pub fn random_hermitian_with(r: &mut impl Rng, n: usize) -> Mat<C64> {
    let m = random_matrix_with(r, n, n);
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn random_hermitian(n: usize, seed: u64) -> Mat<C64> {
    random_hermitian_with(&mut rng(seed), n)
}

pub fn random_vector(r: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| entry(r)).collect()
}

/// Hermitian matrix with spectrum in `[-1, 1]`, so `|B| <= 1`.
pub fn random_contraction_with(r: &mut impl Rng, n: usize) -> Mat<C64> {
    let h = random_hermitian_with(r, n);
    let evd = h
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigensolver failed on a random Hermitian matrix");
    let d: Vec<C64> = (0..n).map(|_| linalg::c(r.random_range(-1.0..=1.0))).collect();
    let m = linalg::conjugate_diag(evd.U(), &d);
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}
