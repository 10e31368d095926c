//! Time evolution and finite-horizon Kato smoothing integrals.
//!
//! With `y_k = c_k phi~(lambda_k) W psi_k` the integrand is
//! `|sum_k exp(-i t lambda_k) y_k|^2`, so the integral over `[-T, T]` is
//! `sum_{j,k} <y_j, y_k> kappa_T(lambda_j - lambda_k)` with
//! `kappa_T(d) = 2 sin(T d) / d`.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use serde::Serialize;

use crate::cutoff::CutoffSpec;
use crate::ensemble::StateVector;
use crate::error::{invalid, Error, Result};
use crate::grid::GridSpace;
use crate::lap::{sweep_with_weights, SweepGrid};
use crate::linalg::{self, c, C64};
use crate::model::{applied_weight, build_p, ModelSpec};
use crate::norm::operator_norm;
use crate::operator::HermitianOperator;

/// Amplitudes below this fraction of the largest are dropped from the
/// mode sum; they move the integral by far less than the quadrature check.
const MODE_CUTOFF: f64 = 1e-13;

/// Intervals used by the trapezoid cross-check on `[-T, T]`.
const QUADRATURE_INTERVALS: usize = 4096;

/// `exp(-i t H) phi0` through the eigenbasis.
pub fn evolve(h: &HermitianOperator, phi0: &StateVector, t: f64) -> Result<StateVector> {
    if phi0.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: phi0.len(),
        });
    }
    if t == 0.0 {
        return Ok(phi0.clone());
    }
    let u = h.eigenvectors();
    let mut coeffs = linalg::matvec_adjoint(u, phi0.amplitudes());
    for (v, &l) in coeffs.iter_mut().zip(h.eigenvalues()) {
        *v *= C64::cis(-t * l);
    }
    StateVector::new(linalg::matvec(u, &coeffs))
}

/// `2 sin(T d) / d`, with a series near `d = 0`.
pub fn kappa(t: f64, d: f64) -> f64 {
    let x = t * d;
    if x.abs() < 1e-4 {
        let x2 = x * x;
        2.0 * t * (1.0 - x2 / 6.0 + x2 * x2 / 120.0)
    } else {
        2.0 * (x).sin() / d
    }
}

/// Mode data for one initial state.
struct Modes {
    values: Vec<f64>,
    /// columns `y_k`
    images: Mat<C64>,
    gram: Mat<C64>,
}

impl Modes {
    fn new(h: &HermitianOperator, w: MatRef<'_, C64>, spec: &CutoffSpec, phi0: &StateVector) -> Result<Self> {
        let u = h.eigenvectors();
        let coeffs = linalg::matvec_adjoint(u, phi0.amplitudes());
        let amps: Vec<C64> = coeffs
            .iter()
            .zip(h.eigenvalues())
            .map(|(ck, &l)| ck * spec.value(l))
            .collect();
        let top = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let keep: Vec<usize> = (0..amps.len()).filter(|&k| top > 0.0 && amps[k].norm() > MODE_CUTOFF * top).collect();
        let n = h.dim();
        let basis = Mat::from_fn(n, keep.len(), |i, j| u[(i, keep[j])] * amps[keep[j]]);
        let images = w * basis;
        let gram = images.adjoint() * &images;
        Ok(Self {
            values: keep.iter().map(|&k| h.eigenvalues()[k]).collect(),
            images,
            gram,
        })
    }

    fn integral(&self, t: f64) -> f64 {
        let k = self.values.len();
        let mut total = 0.0;
        for j in 0..k {
            total += self.gram[(j, j)].re * 2.0 * t;
            for l in (j + 1)..k {
                // the (j, l) and (l, j) terms are conjugate
                total += 2.0 * self.gram[(j, l)].re * kappa(t, self.values[j] - self.values[l]);
            }
        }
        total
    }

    fn integrand(&self, t: f64) -> f64 {
        let phases: Vec<C64> = self.values.iter().map(|&l| C64::cis(-t * l)).collect();
        let v = linalg::matvec(self.images.as_ref(), &phases);
        v.iter().map(|x| x.norm_sqr()).sum()
    }

    fn trapezoid(&self, t: f64) -> f64 {
        let n = QUADRATURE_INTERVALS;
        let h = 2.0 * t / n as f64;
        let mut sum = 0.5 * (self.integrand(-t) + self.integrand(t));
        for i in 1..n {
            sum += self.integrand(-t + i as f64 * h);
        }
        sum * h
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KatoIntegralResult {
    pub t: f64,
    /// `int_{-T}^{T} |W phi~(H) exp(-i t H) phi0|^2 dt`
    pub i_t: f64,
    /// `I_T / (2 pi |phi0|^2)`
    pub normalized: f64,
    pub quadrature: f64,
    pub quadrature_rel_err: f64,
    pub lap_bound: Option<f64>,
    /// `(T', I_T')` on 16 evenly spaced horizons up to `T`
    pub plateau_curve: Vec<(f64, f64)>,
    pub t_star: Option<f64>,
    pub modes_used: usize,
}

pub fn kato_integral(
    h: &HermitianOperator,
    w: MatRef<'_, C64>,
    spec: &CutoffSpec,
    phi0: &StateVector,
    t: f64,
) -> Result<KatoIntegralResult> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid("T", "must be positive"));
    }
    if w.ncols() != h.dim() || phi0.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: if w.ncols() != h.dim() { w.ncols() } else { phi0.len() },
        });
    }
    spec.validate()?;
    let modes = Modes::new(h, w, spec, phi0)?;
    let i_t = modes.integral(t);
    let quadrature = modes.trapezoid(t);
    let quadrature_rel_err = if i_t == 0.0 {
        quadrature.abs()
    } else {
        ((quadrature - i_t) / i_t).abs()
    };
    let norm_sq = phi0.norm().powi(2);
    let plateau_curve = (0..=16)
        .map(|i| {
            let tt = t * i as f64 / 16.0;
            (tt, if i == 0 { 0.0 } else { modes.integral(tt) })
        })
        .collect();
    Ok(KatoIntegralResult {
        t,
        i_t,
        normalized: i_t / (2.0 * PI * norm_sq),
        quadrature,
        quadrature_rel_err,
        lap_bound: None,
        plateau_curve,
        t_star: None,
        modes_used: modes.values.len(),
    })
}

/// `L / (2 v_max)`, `v_max` the largest group speed `|h'(k)|` over grid
/// momenta whose energy lies on the plateau of the cutoff.
pub fn travel_time(grid: &GridSpace, m: &ModelSpec, spec: &CutoffSpec) -> Result<f64> {
    let start = spec.plateau_start();
    let v_max = grid
        .wavenumbers()
        .iter()
        .filter(|&&k| m.h(k) >= start)
        .map(|&k| m.h_prime(k).abs())
        .fold(0.0, f64::max);
    if v_max == 0.0 {
        return Err(Error::EmptySpectralSupport);
    }
    Ok(grid.length() / (2.0 * v_max))
}

/// Spectral projection onto the plateau `phi~ = 1`; returns the projected
/// state and `|P phi0| / |phi0|`.
pub fn project_to_plateau(
    h: &HermitianOperator,
    spec: &CutoffSpec,
    phi0: &StateVector,
) -> Result<(StateVector, f64)> {
    let u = h.eigenvectors();
    let mut coeffs = linalg::matvec_adjoint(u, phi0.amplitudes());
    for (v, &l) in coeffs.iter_mut().zip(h.eigenvalues()) {
        if spec.value(l) < 1.0 {
            *v = c(0.0);
        }
    }
    let projected = StateVector::new(linalg::matvec(u, &coeffs))?;
    let ratio = projected.norm() / phi0.norm();
    if !(ratio > 1e-8) {
        return Err(Error::EmptySpectralSupport);
    }
    Ok((projected, ratio))
}

#[derive(Debug, Clone, Serialize)]
pub struct KatoComparison {
    pub projection_norm: f64,
    pub result: KatoIntegralResult,
    pub lap_bound: f64,
    pub tolerance: f64,
    /// `I_{2T*} / I_{T*}`; near 2 means the state never leaves the weight
    pub growth_ratio: f64,
    pub linear_growth: bool,
    pub pass: bool,
}

/// Kato integral at the travel-time horizon against the sweep sup of
/// `W phi~ (H - z)^{-1} phi~ W^*`.
pub fn kato_vs_lap(
    h: &HermitianOperator,
    w: MatRef<'_, C64>,
    spec: &CutoffSpec,
    phi0: &StateVector,
    grid: &SweepGrid,
    t_star: f64,
) -> Result<KatoComparison> {
    let (projected, projection_norm) = project_to_plateau(h, spec, phi0)?;
    let phi_t = h.apply_function(spec.function())?;
    let left = w * phi_t.matrix();
    let right = phi_t.matrix() * w.adjoint();
    let sweep = sweep_with_weights(h, left.as_ref(), right.as_ref(), grid)?;
    kato_against_bound(h, w, spec, &projected, projection_norm, sweep.sup_measured, t_star)
}

/// As [`kato_vs_lap`] with the bound supplied, so one sweep can serve many packets.
pub fn kato_against_bound(
    h: &HermitianOperator,
    w: MatRef<'_, C64>,
    spec: &CutoffSpec,
    projected: &StateVector,
    projection_norm: f64,
    lap_bound: f64,
    t_star: f64,
) -> Result<KatoComparison> {
    let tolerance = 0.2;
    let mut result = kato_integral(h, w, spec, projected, t_star)?;
    result.lap_bound = Some(lap_bound);
    result.t_star = Some(t_star);
    let modes = Modes::new(h, w, spec, projected)?;
    let later = modes.integral(2.0 * t_star);
    let growth_ratio = if result.i_t > 0.0 { later / result.i_t } else { 1.0 };
    let linear_growth = growth_ratio > 1.5;
    let pass = !linear_growth && result.normalized <= lap_bound * (1.0 + tolerance);
    Ok(KatoComparison {
        projection_norm,
        result,
        lap_bound,
        tolerance,
        growth_ratio,
        linear_growth,
        pass,
    })
}

/// Branch point `(2 gamma - 1) / (4 gamma)`.
pub fn beta_star(gamma: f64) -> f64 {
    (2.0 * gamma - 1.0) / (4.0 * gamma)
}

/// Smoothing order `theta(beta, gamma, s)` of the applied weight.
pub fn theta_exponent(beta: f64, gamma: f64, s: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&beta) {
        return Err(invalid("beta", "must lie in [0, 1/2]"));
    }
    if !(gamma >= 0.5) {
        return Err(invalid("gamma", "must be at least 1/2"));
    }
    if !(s > 0.5 && s <= 1.0) {
        return Err(invalid("s", "must lie in (1/2, 1]"));
    }
    Ok(if beta >= beta_star(gamma) {
        -4.0 * beta * gamma * s + 2.0 * beta * gamma - s + 2.0 * gamma * s
    } else {
        2.0 * beta * gamma
    })
}

/// Grid maximum of `theta` over `beta in [0, 1/2]`: `(beta, theta)`.
pub fn theta_scan(gamma: f64, s: f64, points: usize) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut betas: Vec<f64> = (0..points).map(|i| 0.5 * i as f64 / (points - 1) as f64).collect();
    betas.push(beta_star(gamma));
    for b in betas {
        let th = theta_exponent(b, gamma, s)?;
        if th > best.1 {
            best = (b, th);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub beta: f64,
    /// `|<x>^{-s} <p>^{gamma - 1/2} <H>^{-beta} <P>^{s}|`
    pub first_factor: f64,
    pub rows: Vec<ChainRow>,
    pub holds: bool,
}

/// Checks `|W_x phi~ e^{-itH} phi| <= |W_x <H>^{-beta} <P>^s| |<P>^{-s} <H>^beta phi~ e^{-itH} phi|`
/// at `beta = beta*` and the given times.
#[allow(clippy::too_many_arguments)]
pub fn smoothing_chain_check(
    grid: &GridSpace,
    m: &ModelSpec,
    h: &HermitianOperator,
    a: &HermitianOperator,
    s: f64,
    spec: &CutoffSpec,
    phi0: &StateVector,
    times: &[f64],
) -> Result<ChainReport> {
    let beta = beta_star(m.gamma);
    let wx = applied_weight(grid, s, m.gamma - 0.5);
    let p = build_p(h, a, beta)?;
    let p_up = p.bracket_weight(-s);
    let p_down = p.bracket_weight(s);
    let z = h.apply_function(|l| (1.0 + l * l).powf(beta / 2.0))?;
    let z_inv = h.apply_function(|l| (1.0 + l * l).powf(-beta / 2.0))?;
    let first = &wx * z_inv.matrix() * p_up.matrix();
    let first_factor = operator_norm(first.as_ref())?;
    let phi_t = h.apply_function(spec.function())?;
    let inner = p_down.matrix() * z.matrix();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let v = StateVector::new(linalg::matvec(phi_t.matrix(), evolve(h, phi0, t)?.amplitudes()))?;
        let lhs = linalg::vec_norm(&linalg::matvec(wx.as_ref(), v.amplitudes()));
        let rhs = first_factor * linalg::vec_norm(&linalg::matvec(inner.as_ref(), v.amplitudes()));
        rows.push(ChainRow { t, lhs, rhs });
    }
    let holds = first_factor.is_finite() && rows.iter().all(|r| r.lhs <= r.rhs * (1.0 + 1e-10));
    Ok(ChainReport {
        beta,
        first_factor,
        rows,
        holds,
    })
}
