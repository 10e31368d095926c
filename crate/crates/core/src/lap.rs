//! Weighted resolvent norms and high-energy LAP sweeps.
//!
//! `|W_L (H - z)^{-1} W_R|` is evaluated as `|L diag(1/(lambda_k - z)) R|`
//! with `L = W_L U` and `R = U^* W_R` precomputed from the eigendecomposition
//! of `H`. The norm itself is found matrix-free (Lanczos on `M^* M`).

use faer::{Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffSpec;
use crate::ensemble::{ensemble_norm, Ensemble};
use crate::error::{invalid, Error, Result};
use crate::grid::GridSpace;
use crate::linalg::{self, c, C64};
use crate::model::build_p;
use crate::norm::{krylov_norm, LinearMap};
use crate::operator::{momentum_operator, HermitianOperator};

/// `W_L (H - z)^{-1} W_R` in factored form.
pub struct WeightedResolvent {
    values: Vec<f64>,
    left: Mat<C64>,
    right: Mat<C64>,
}

struct Sandwich<'a> {
    op: &'a WeightedResolvent,
    diag: Vec<C64>,
}

impl LinearMap for Sandwich<'_> {
    fn ncols(&self) -> usize {
        self.op.right.ncols()
    }
    fn nrows(&self) -> usize {
        self.op.left.nrows()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = linalg::matvec(self.op.right.as_ref(), x);
        y.iter_mut().zip(&self.diag).for_each(|(v, d)| *v *= d);
        linalg::matvec(self.op.left.as_ref(), &y)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let mut x = linalg::matvec_adjoint(self.op.left.as_ref(), y);
        x.iter_mut().zip(&self.diag).for_each(|(v, d)| *v *= d.conj());
        linalg::matvec_adjoint(self.op.right.as_ref(), &x)
    }
}

impl WeightedResolvent {
    pub fn new(h: &HermitianOperator, w_left: MatRef<'_, C64>, w_right: MatRef<'_, C64>) -> Result<Self> {
        let n = h.dim();
        for found in [w_left.ncols(), w_right.nrows()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        let u = h.eigenvectors();
        Ok(Self {
            values: h.eigenvalues().to_vec(),
            left: w_left * u,
            right: u.adjoint() * w_right,
        })
    }

    /// Unweighted (`W = I`) resolvent.
    pub fn plain(h: &HermitianOperator) -> Self {
        let u = h.eigenvectors();
        Self {
            values: h.eigenvalues().to_vec(),
            left: u.to_owned(),
            right: u.adjoint().to_owned(),
        }
    }

    fn diag(&self, z: C64) -> Vec<C64> {
        self.values.iter().map(|&l| (c(l) - z).inv()).collect()
    }

    /// `|W_L (H - z)^{-1} W_R|`.
    pub fn norm(&self, z: C64) -> f64 {
        krylov_norm(&Sandwich {
            op: self,
            diag: self.diag(z),
        })
    }

    /// The dense matrix, mostly for checks.
    pub fn matrix(&self, z: C64) -> Mat<C64> {
        linalg::scale_columns(self.left.as_ref(), &self.diag(z)) * &self.right
    }
}

/// Norms for `z = lambda + i mu` and `z = lambda - i mu`.
pub fn weighted_resolvent_norm(
    h: &HermitianOperator,
    w_left: MatRef<'_, C64>,
    w_right: MatRef<'_, C64>,
    lambda: f64,
    mu: f64,
) -> Result<(f64, f64)> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid("mu", "must be positive"));
    }
    let wr = WeightedResolvent::new(h, w_left, w_right)?;
    Ok((wr.norm(C64::new(lambda, mu)), wr.norm(C64::new(lambda, -mu))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightMode {
    /// `<A>^{-s}` on both sides
    BracketA,
    /// `<P>^{-s} <H>^beta` on the left, its adjoint on the right
    PBeta { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub n_lambda: usize,
    pub n_mu: usize,
    pub mu_max: f64,
    /// `mu_min` as a multiple of the mean level spacing
    pub spacing_factor: f64,
    /// explicit `mu_min`; still checked against the spacing rule
    pub mu_min: Option<f64>,
    /// relative jump between neighbours that triggers a midpoint
    pub refine_jump: f64,
}

impl SweepOptions {
    /// The window `[3R, 6R]` with 64 energies and 16 damping values.
    pub fn window(r: f64) -> Self {
        Self {
            lambda_lo: 3.0 * r,
            lambda_hi: 6.0 * r,
            n_lambda: 64,
            n_mu: 16,
            mu_max: 1.0,
            spacing_factor: 10.0,
            mu_min: None,
            refine_jump: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepGrid {
    pub lambda_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    pub mu_min: f64,
    pub level_spacing: f64,
    pub refine_jump: f64,
}

/// Mean eigenvalue spacing of `H` in `[lo - 1, hi + 1]`.
pub fn mean_level_spacing(h: &HermitianOperator, lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo - 1.0, hi + 1.0);
    let count = h.eigenvalues().iter().filter(|&&l| l >= a && l <= b).count();
    if count == 0 {
        f64::INFINITY
    } else {
        (b - a) / count as f64
    }
}

impl SweepGrid {
    pub fn build(h: &HermitianOperator, opts: &SweepOptions) -> Result<Self> {
        if !(opts.lambda_hi > opts.lambda_lo) || opts.n_lambda < 2 || opts.n_mu < 1 {
            return Err(invalid("sweep", "need lambda_hi > lambda_lo, n_lambda >= 2, n_mu >= 1"));
        }
        let spacing = mean_level_spacing(h, opts.lambda_lo, opts.lambda_hi);
        if !spacing.is_finite() {
            return Err(invalid("sweep", "no eigenvalues of H near the sweep window"));
        }
        let mu_min = opts.mu_min.unwrap_or(opts.spacing_factor * spacing);
        let mu_values = if mu_min >= opts.mu_max || opts.n_mu == 1 {
            vec![mu_min]
        } else {
            let (a, b) = (mu_min.ln(), opts.mu_max.ln());
            (0..opts.n_mu)
                .map(|i| (a + (b - a) * i as f64 / (opts.n_mu - 1) as f64).exp())
                .collect()
        };
        let width = opts.lambda_hi - opts.lambda_lo;
        let needed = (width / (mu_min / 2.0)).ceil() as usize + 1;
        let n = opts.n_lambda.max(needed);
        let lambda_values = (0..n)
            .map(|i| opts.lambda_lo + width * i as f64 / (n - 1) as f64)
            .collect();
        let grid = Self {
            lambda_values,
            mu_values,
            mu_min,
            level_spacing: spacing,
            refine_jump: opts.refine_jump,
        };
        grid.validate(h, opts.spacing_factor)?;
        Ok(grid)
    }

    pub fn validate(&self, h: &HermitianOperator, spacing_factor: f64) -> Result<()> {
        let lo = self.lambda_values[0];
        let hi = *self.lambda_values.last().expect("nonempty");
        let spacing = mean_level_spacing(h, lo, hi);
        let required = spacing_factor * spacing;
        let smallest = self.mu_values.iter().copied().fold(f64::INFINITY, f64::min);
        if smallest < required * (1.0 - 1e-12) {
            return Err(Error::LevelSpacing {
                mu_min: smallest,
                spacing,
                required,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LapSweepResult {
    pub s: f64,
    pub mode: WeightMode,
    pub lambda_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    /// `norms[i][j]` at `lambda_values[i]`, `mu_values[j]`, `z = lambda + i mu`
    pub norms: Vec<Vec<f64>>,
    pub sup_measured: f64,
    pub argmax: (f64, f64),
    /// the `z = lambda - i mu` branch at the argmax
    pub conjugate_at_argmax: f64,
    pub weight_norms: (f64, f64),
    pub refined_points: usize,
    pub level_spacing: f64,
    pub rhs: Option<RhsComparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhsComparison {
    pub params: RhsParams,
    pub branch: RhsBranch,
    pub beta: f64,
    pub value: f64,
    pub holds: bool,
}

/// Weights `(W_L, W_R)` for a sweep mode.
pub fn sweep_weights(
    h: &HermitianOperator,
    a: &HermitianOperator,
    s: f64,
    mode: WeightMode,
) -> Result<(Mat<C64>, Mat<C64>)> {
    match mode {
        WeightMode::BracketA => {
            let w = a.bracket_weight(s).into_matrix();
            Ok((w.clone(), w))
        }
        WeightMode::PBeta { beta } => {
            let p = build_p(h, a, beta)?;
            let wp = p.bracket_weight(s);
            let z = h.apply_function(|l| (1.0 + l * l).powf(beta / 2.0))?;
            let left = wp.matrix() * z.matrix();
            let right = z.matrix() * wp.matrix();
            Ok((left, right))
        }
    }
}

pub fn lap_sweep(
    h: &HermitianOperator,
    a: &HermitianOperator,
    s: f64,
    grid: &SweepGrid,
    mode: WeightMode,
) -> Result<LapSweepResult> {
    if !s.is_finite() || s < 0.0 {
        return Err(invalid("s", "must be nonnegative"));
    }
    let (wl, wr) = sweep_weights(h, a, s, mode)?;
    let mut result = sweep_with_weights(h, wl.as_ref(), wr.as_ref(), grid)?;
    result.s = s;
    result.mode = mode;
    Ok(result)
}

/// Sweep for explicit weights; `s` and `mode` in the result are placeholders.
pub fn sweep_with_weights(
    h: &HermitianOperator,
    wl: MatRef<'_, C64>,
    wr: MatRef<'_, C64>,
    grid: &SweepGrid,
) -> Result<LapSweepResult> {
    let op = WeightedResolvent::new(h, wl, wr)?;
    let mus = &grid.mu_values;
    let row = |lambda: f64| -> Vec<f64> { mus.iter().map(|&mu| op.norm(C64::new(lambda, mu))).collect() };

    let mut lambdas = grid.lambda_values.clone();
    let mut rows: Vec<Vec<f64>> = lambdas.par_iter().map(|&l| row(l)).collect();

    // one refinement pass
    let jump = 1.0 + grid.refine_jump;
    let mids: Vec<f64> = (0..lambdas.len() - 1)
        .filter(|&i| {
            rows[i].iter().zip(&rows[i + 1]).any(|(a, b)| {
                let (lo, hi) = if a < b { (*a, *b) } else { (*b, *a) };
                hi > jump * lo
            })
        })
        .map(|i| 0.5 * (lambdas[i] + lambdas[i + 1]))
        .collect();
    let refined_points = mids.len();
    let mid_rows: Vec<Vec<f64>> = mids.par_iter().map(|&l| row(l)).collect();
    let mut merged: Vec<(f64, Vec<f64>)> = lambdas.drain(..).zip(rows.drain(..)).collect();
    merged.extend(mids.into_iter().zip(mid_rows));
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lambda_values, norms): (Vec<f64>, Vec<Vec<f64>>) = merged.into_iter().unzip();

    // ties go to the smallest lambda, then the smallest mu
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (i, r) in norms.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteMatrix);
            }
            if v > best.0 {
                best = (v, i, j);
            }
        }
    }
    let argmax = (lambda_values[best.1], mus[best.2]);
    let conjugate_at_argmax = op.norm(C64::new(argmax.0, -argmax.1));
    let weight_norms = (
        crate::norm::operator_norm(wl)?,
        crate::norm::operator_norm(wr)?,
    );
    Ok(LapSweepResult {
        s: 0.0,
        mode: WeightMode::BracketA,
        lambda_values,
        mu_values: mus.clone(),
        norms,
        sup_measured: best.0,
        argmax,
        conjugate_at_argmax,
        weight_norms,
        refined_points,
        level_spacing: grid.level_spacing,
        rhs: None,
    })
}

impl LapSweepResult {
    /// `|W_L| |W_R| / mu` at every grid point, returned as the worst ratio
    /// `measured / bound` (at most 1 up to round-off).
    pub fn trivial_bound_ratio(&self) -> f64 {
        let w = self.weight_norms.0 * self.weight_norms.1;
        let mut worst: f64 = 0.0;
        for r in &self.norms {
            for (v, mu) in r.iter().zip(&self.mu_values) {
                worst = worst.max(v * mu / w);
            }
        }
        worst
    }

    /// Compares `sup_measured` with the closed form, at the best `R_tilde`
    /// when `optimize` is set and at `base.r_tilde` otherwise.
    pub fn compare_with_rhs(&mut self, base: RhsParams, beta: f64, optimize: bool) -> Result<&RhsComparison> {
        let (params, branch, value) = if optimize {
            rhs_optimal(&base)?
        } else {
            let (v, b) = rhs_best(&base)?;
            (base, b, v)
        };
        self.rhs = Some(RhsComparison {
            params,
            branch,
            beta,
            value,
            holds: self.sup_measured <= value,
        });
        Ok(self.rhs.as_ref().expect("just set"))
    }
}

// ---------------------------------------------------------------------------
// closed-form right-hand sides

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsBranch {
    /// `1/2 < s <= 1`, regularized weight
    Weak,
    /// `s >= 1`
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhsParams {
    pub s: f64,
    pub r_tilde: f64,
    pub delta: f64,
    pub c0: f64,
    pub c2: f64,
    pub eps_hat: f64,
    pub r: f64,
}

/// `(1-s)^{1-s} (2-s)^{s-2}` with `0^0 = 1`.
pub fn c_of_s(s: f64) -> f64 {
    (1.0 - s).powf(1.0 - s) * (2.0 - s).powf(s - 2.0)
}

/// `s^{-s} (s-1)^{s-1}` with `0^0 = 1`.
#[allow(non_snake_case)]
pub fn C_of_s(s: f64) -> f64 {
    s.powf(-s) * (s - 1.0).powf(s - 1.0)
}

/// `(1 - R^{-eps_hat})^{-1}`.
pub fn default_delta(r: f64, eps_hat: f64) -> f64 {
    1.0 / (1.0 - r.powf(-eps_hat))
}

impl RhsParams {
    pub fn r_tilde_max(&self) -> f64 {
        self.r.powf(1.0 - self.eps_hat)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.5) {
            return Err(invalid("s", "must exceed 1/2"));
        }
        if !(self.eps_hat > 0.0 && self.eps_hat < 1.0) {
            return Err(invalid("eps_hat", "must lie in (0, 1)"));
        }
        if !(self.r > 0.0) {
            return Err(invalid("R", "must be positive"));
        }
        if !(self.r_tilde > 0.0) {
            return Err(invalid("R_tilde", "must be positive"));
        }
        let max = self.r_tilde_max();
        if self.r_tilde > max * (1.0 + 1e-12) {
            return Err(invalid(
                "R_tilde",
                format!("must not exceed R^(1 - eps_hat) = {max}"),
            ));
        }
        if !(self.delta >= 1.0) {
            return Err(invalid("delta", "must be at least 1"));
        }
        if !(self.c0 > 0.0) {
            return Err(invalid("c0", "must be positive"));
        }
        if !(self.c2 >= 0.0) {
            return Err(invalid("c2", "must be nonnegative"));
        }
        Ok(())
    }
}

pub fn rhs_eval(p: &RhsParams, branch: RhsBranch) -> Result<f64> {
    p.validate()?;
    let s = p.s;
    let d = p.delta;
    let rt = p.r_tilde;
    let inner = match branch {
        RhsBranch::Weak => {
            if s > 1.0 {
                return Err(invalid("s", "the first bound needs 1/2 < s <= 1"));
            }
            (d / rt).sqrt() + d * rt.powf(s - 0.5) * (1.0 - s).powf(1.0 - s) * (2.0 - s) / (2.0 * s - 1.0)
        }
        RhsBranch::Strong => {
            if s < 1.0 {
                return Err(invalid("s", "the second bound needs s >= 1"));
            }
            (d / rt).sqrt() + 2.0 * d * C_of_s(s) * rt.sqrt()
        }
    };
    Ok(inner * inner * (d * p.c2 * rt / p.c0).exp() / p.c0)
}

/// Smaller of the applicable branches (both at `s = 1`).
pub fn rhs_best(p: &RhsParams) -> Result<(f64, RhsBranch)> {
    let mut out: Option<(f64, RhsBranch)> = None;
    for b in [RhsBranch::Weak, RhsBranch::Strong] {
        if let Ok(v) = rhs_eval(p, b) {
            if out.is_none_or(|(best, _)| v < best) {
                out = Some((v, b));
            }
        }
    }
    out.ok_or_else(|| invalid("s", "no branch applies"))
}

/// `R_tilde` in `(0, R^{1-eps_hat}]` minimizing the right-hand side:
/// log-spaced scan followed by golden-section refinement.
pub fn optimal_r_tilde(p: &RhsParams, branch: RhsBranch) -> Result<RhsParams> {
    let max = p.r_tilde_max();
    let eval = |rt: f64| {
        rhs_eval(&RhsParams { r_tilde: rt, ..*p }, branch).unwrap_or(f64::INFINITY)
    };
    let n = 400;
    let lo_exp = (max * 1e-6).ln();
    let hi_exp = max.ln();
    let pts: Vec<f64> = (0..=n)
        .map(|i| (lo_exp + (hi_exp - lo_exp) * i as f64 / n as f64).exp())
        .collect();
    let mut best = n;
    for i in 0..=n {
        if eval(pts[i]) < eval(pts[best]) {
            best = i;
        }
    }
    let (mut a, mut b) = (pts[best.saturating_sub(1)], pts[(best + 1).min(n)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if eval(x1) <= eval(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let mut rt = 0.5 * (a + b);
    if eval(pts[best]) < eval(rt) {
        rt = pts[best];
    }
    let out = RhsParams { r_tilde: rt.min(max), ..*p };
    out.validate()?;
    Ok(out)
}

/// Minimizes over `R_tilde` in each applicable branch and keeps the smaller.
pub fn rhs_optimal(base: &RhsParams) -> Result<(RhsParams, RhsBranch, f64)> {
    let mut out: Option<(RhsParams, RhsBranch, f64)> = None;
    for branch in [RhsBranch::Weak, RhsBranch::Strong] {
        if rhs_eval(&RhsParams { r_tilde: base.r_tilde_max(), ..*base }, branch).is_err() {
            continue;
        }
        let p = optimal_r_tilde(base, branch)?;
        let v = rhs_eval(&p, branch)?;
        if out.as_ref().is_none_or(|o| v < o.2) {
            out = Some((p, branch, v));
        }
    }
    out.ok_or_else(|| invalid("s", "no branch applies"))
}

// ---------------------------------------------------------------------------
// assembly over all energies

#[derive(Debug, Clone, Serialize)]
pub struct GlobalAssembly {
    pub r: f64,
    pub s: f64,
    pub s_prime: f64,
    /// `sup_{|lambda| <= 3R} |phi~ (H - z)^{-1} phi~|`
    pub low_energy: f64,
    /// `|<A>^{-s} phi~(H) <A>^{s'}|^2` on bulk packets
    pub conjugation: f64,
    pub conjugation_full: f64,
    /// sweep of `<A>^{-s'} (H - z)^{-1} <A>^{-s'}` over `|lambda| >= 3R`
    pub high_energy: f64,
    /// `max(low_energy, conjugation * high_energy)`
    pub assembled: f64,
    /// direct sweep of `<A>^{-s} phi~ (H - z)^{-1} phi~ <A>^{-s}`
    pub direct: f64,
}

pub fn global_lap_assembly(
    h: &HermitianOperator,
    a: &HermitianOperator,
    s: f64,
    s_prime: f64,
    r: f64,
    grid: &SweepGrid,
    ensemble: &Ensemble,
) -> Result<GlobalAssembly> {
    if !(s_prime > 0.5 && s_prime <= s && s_prime <= 1.0) {
        return Err(invalid("s_prime", "need 1/2 < s' <= min(s, 1)"));
    }
    let tilde = CutoffSpec::tilde(r);
    tilde.validate()?;
    let phi_t = h.apply_function(tilde.function())?;

    // (i) is exact: phi~ and the resolvent share the eigenbasis of H
    let n_lam = 241;
    let mut low_energy: f64 = 0.0;
    for i in 0..n_lam {
        let lambda = -3.0 * r + 6.0 * r * i as f64 / (n_lam - 1) as f64;
        for &mu in &grid.mu_values {
            for &l in h.eigenvalues() {
                let f = tilde.value(l);
                if f > 0.0 {
                    low_energy = low_energy.max(f * f / C64::new(l - lambda, mu).norm());
                }
            }
        }
    }

    let w_s = a.bracket_weight(s);
    let w_sp_inv = a.bracket_weight(-s_prime);
    let conj = w_s.matrix() * phi_t.matrix() * w_sp_inv.matrix();
    let conjugation = ensemble_norm(conj.as_ref(), ensemble)?.powi(2);
    let conjugation_full = crate::norm::operator_norm(conj.as_ref())?.powi(2);

    let high = lap_sweep(h, a, s_prime, grid, WeightMode::BracketA)?;
    let left = w_s.matrix() * phi_t.matrix();
    let right = phi_t.matrix() * w_s.matrix();
    let direct = sweep_with_weights(h, left.as_ref(), right.as_ref(), grid)?;

    Ok(GlobalAssembly {
        r,
        s,
        s_prime,
        low_energy,
        conjugation,
        conjugation_full,
        high_energy: high.sup_measured,
        assembled: low_energy.max(conjugation * high.sup_measured),
        direct: direct.sup_measured,
    })
}

// ---------------------------------------------------------------------------
// translation counterexample

/// `|<x>^{-s} (p - lambda0 - i mu)^{-1} <x>^{-s}|` at `lambda0` and at
/// `lambda0 + 2 pi m / L`.
pub fn translation_covariance_check(
    grid: &GridSpace,
    s: f64,
    lambda0: f64,
    m: i64,
    mu: f64,
) -> Result<(f64, f64)> {
    if !(mu > 0.0) {
        return Err(invalid("mu", "must be positive"));
    }
    let band = 0.75 * grid.k_max();
    let shifted = lambda0 + grid.dk() * m as f64;
    for l in [lambda0, shifted] {
        if l.abs() > band {
            return Err(Error::OutOfBand { lambda: l, band });
        }
    }
    let p = momentum_operator(grid);
    let w: Vec<f64> = grid
        .coordinates()
        .iter()
        .map(|&x| (1.0 + x * x).powf(-s / 2.0))
        .collect();
    let wm = linalg::diagonal(&w);
    let op = WeightedResolvent::new(&p, wm.as_ref(), wm.as_ref())?;
    Ok((op.norm(C64::new(lambda0, mu)), op.norm(C64::new(shifted, mu))))
}
