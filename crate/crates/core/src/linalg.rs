//! Small dense helpers on top of `faer`.

use faer::{Mat, MatRef};
use rustfft::FftPlanner;

use crate::grid::GridSpace;

pub use faer::c64 as C64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::identity(n, n)
}

pub fn diagonal(values: &[f64]) -> Mat<C64> {
    let n = values.len();
    let mut m = Mat::zeros(n, n);
    for (j, v) in values.iter().enumerate() {
        m[(j, j)] = c(*v);
    }
    m
}

pub fn frobenius(m: MatRef<'_, C64>) -> f64 {
    m.norm_l2()
}

pub fn adjoint(m: MatRef<'_, C64>) -> Mat<C64> {
    m.adjoint().to_owned()
}

pub fn is_finite(m: MatRef<'_, C64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

/// `m * diag(d)`.
pub fn scale_columns(m: MatRef<'_, C64>, d: &[C64]) -> Mat<C64> {
    assert_eq!(m.ncols(), d.len());
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * d[j])
}

/// `diag(d) * m`.
pub fn scale_rows(m: MatRef<'_, C64>, d: &[C64]) -> Mat<C64> {
    assert_eq!(m.nrows(), d.len());
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)])
}

/// `u * diag(d) * u^*`.
pub fn conjugate_diag(u: MatRef<'_, C64>, d: &[C64]) -> Mat<C64> {
    scale_columns(u, d) * u.adjoint()
}

/// `a b - b a`.
pub fn commutator(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    a * b - b * a
}

/// Dense inverse by partial-pivot LU.
pub fn inverse(m: MatRef<'_, C64>) -> crate::Result<Mat<C64>> {
    use faer::linalg::solvers::DenseSolveCore;
    let inv = m.partial_piv_lu().inverse();
    if !is_finite(inv.as_ref()) {
        return Err(crate::Error::NonFiniteMatrix);
    }
    Ok(inv)
}

pub fn matvec(m: MatRef<'_, C64>, x: &[C64]) -> Vec<C64> {
    let y = m * faer::col::ColRef::from_slice(x);
    (0..y.nrows()).map(|i| y[i]).collect()
}

pub fn matvec_adjoint(m: MatRef<'_, C64>, x: &[C64]) -> Vec<C64> {
    let y = m.adjoint() * faer::col::ColRef::from_slice(x);
    (0..y.nrows()).map(|i| y[i]).collect()
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Circulant matrix of the Fourier multiplier `f(p)` on the grid.
///
/// Entry `(j, l)` is `N^-1 sum_m f(k_m) exp(2 pi i m (j - l) / N)`; the first
/// column is computed with one inverse FFT.
pub fn fourier_multiplier(grid: &GridSpace, f: impl Fn(f64) -> f64) -> Mat<C64> {
    fourier_multiplier_complex(grid, |k| c(f(k)))
}

pub fn fourier_multiplier_complex(grid: &GridSpace, f: impl Fn(f64) -> C64) -> Mat<C64> {
    let n = grid.len();
    let mut column: Vec<C64> = (0..n).map(|m| f(grid.fft_wavenumber(m))).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut column);
    let scale = 1.0 / n as f64;
    Mat::from_fn(n, n, |j, l| column[(j + n - l) % n] * scale)
}

/// Orthonormal plane waves `exp(i k x_j) / sqrt(N)` as columns, ordered by
/// ascending wavenumber.
pub fn plane_wave_basis(grid: &GridSpace) -> Mat<C64> {
    let n = grid.len();
    let norm = 1.0 / (n as f64).sqrt();
    let x = grid.coordinates();
    let k = grid.wavenumbers();
    Mat::from_fn(n, n, |j, m| C64::cis(k[m] * x[j]) * norm)
}
