//! The regularized resolvent `G(eps) = (H - lambda - i mu - i eps M^* M)^{-1}`
//! and the inequalities the LAP proof is built from.
//!
//! Everything here is dense and meant for `N` up to about 1024.

use faer::Mat;
use serde::Serialize;

use crate::commutator::commutator_i;
use crate::cutoff::{cutoff_operator, CutoffSpec};
use crate::error::{invalid, Result};
use crate::lap::c_of_s;
use crate::linalg::{self, c, C64};
use crate::norm::operator_norm;
use crate::operator::HermitianOperator;
use crate::random::{random_contraction_with, random_matrix_with, rng};

#[derive(Debug, Clone, Serialize)]
pub struct WeightReport {
    pub s: f64,
    pub eps: f64,
    pub aw_norm: f64,
    pub aw_bound: f64,
    pub w_prime_norm: f64,
    pub w_prime_bound: f64,
}

impl WeightReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.aw_norm <= self.aw_bound * (1.0 + slack) && self.w_prime_norm <= self.w_prime_bound * (1.0 + slack)
    }
}

pub struct MourreWeight {
    /// `(|A| + 1)^{-s} (eps |A| + 1)^{s-1}`
    pub weight: HermitianOperator,
    /// derivative of the weight in `eps`
    pub derivative: HermitianOperator,
    pub report: WeightReport,
}

fn weight_fn(s: f64, eps: f64) -> impl Fn(f64) -> f64 {
    move |l: f64| {
        let t = l.abs();
        (t + 1.0).powf(-s) * (eps * t + 1.0).powf(s - 1.0)
    }
}

fn weight_derivative_fn(s: f64, eps: f64) -> impl Fn(f64) -> f64 {
    move |l: f64| {
        let t = l.abs();
        (s - 1.0) * t * (t + 1.0).powf(-s) * (eps * t + 1.0).powf(s - 2.0)
    }
}

pub fn mourre_weight(a: &HermitianOperator, s: f64, eps: f64) -> Result<MourreWeight> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(invalid("s", "must lie in (1/2, 1]"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("eps", "must lie in (0, 1]"));
    }
    let w = weight_fn(s, eps);
    let dw = weight_derivative_fn(s, eps);
    let weight = a.apply_function(&w)?;
    let derivative = a.apply_function(&dw)?;
    // both are functions of A, so their norms are spectral sups
    let sup = |f: &dyn Fn(f64) -> f64| a.eigenvalues().iter().map(|&l| f(l).abs()).fold(0.0, f64::max);
    let report = WeightReport {
        s,
        eps,
        aw_norm: sup(&|l| l * w(l)),
        aw_bound: eps.powf(s - 1.0),
        w_prime_norm: sup(&dw),
        w_prime_bound: (1.0 - s) * c_of_s(s) * eps.powf(s - 1.0),
    };
    Ok(MourreWeight {
        weight,
        derivative,
        report,
    })
}

/// Outcome of the eigenvalue clamp in a PSD square root.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClampReport {
    pub min_eigenvalue: f64,
    /// `-1e-6 |B|`; eigenvalues below this are more than round-off
    pub threshold: f64,
    pub warned: bool,
}

/// `(sqrt(K_+), K_+)` where `K_+` zeroes the negative part of `K`.
pub fn psd_sqrt(k: Mat<C64>, scale: f64) -> Result<(Mat<C64>, Mat<C64>, ClampReport)> {
    let op = HermitianOperator::symmetrized(k)?;
    let min_eigenvalue = op.eigenvalues()[0];
    let threshold = -1e-6 * scale;
    let warned = min_eigenvalue < threshold;
    if warned {
        log::warn!("clamping a genuinely negative eigenvalue {min_eigenvalue:.3e} (threshold {threshold:.3e})");
    }
    let root = op.eigen().function_matrix(|l| c(l.max(0.0).sqrt()));
    let square = op.eigen().function_matrix(|l| c(l.max(0.0)));
    Ok((
        root,
        square,
        ClampReport {
            min_eigenvalue,
            threshold,
            warned,
        },
    ))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegularizedParams {
    pub s: f64,
    pub lambda: f64,
    pub mu: f64,
    pub beta: f64,
    pub c0: f64,
    pub c2: f64,
    pub delta: f64,
    /// random Hermitian contractions per check
    pub contractions: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonRow {
    pub eps: f64,
    /// `max (lhs - rhs) / rhs` of `|M_1 G B| <= eps^{-1/2} |B G B|^{1/2}`
    pub b2_excess: f64,
    /// `|G| c0 eps / delta`
    pub b3_ratio: f64,
    /// `|(phi - 1) G| R`
    pub b4_product: f64,
    /// `(lhs - rhs) / rhs` of `|G(eps) - G(0)| <= eps |M^* M| |G(eps)| |G(0)|`
    pub resolvent_identity_excess: f64,
    pub f_norm: f64,
    pub f_prime_norm: f64,
    pub f_prime_envelope: f64,
    /// `max(0, |F'| - envelope)`
    pub f_prime_slack: f64,
    /// `|Z G_beta Z| (mu^2 / lambda^{4 beta} + eps^2)^{1/2}`
    pub decay_ratio: f64,
    /// same convention as `b2_excess`, for `|Q_1 G_beta Z B| <= eps^{-1/2} |B Z G_beta Z B|^{1/2}`
    pub c2_excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularizedTrace {
    pub r: f64,
    pub params: RegularizedParams,
    pub clamp: ClampReport,
    pub clamp_beta: ClampReport,
    pub rows: Vec<EpsilonRow>,
}

impl RegularizedTrace {
    pub fn worst_b2(&self) -> f64 {
        self.rows.iter().map(|r| r.b2_excess).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn worst_c2(&self) -> f64 {
        self.rows.iter().map(|r| r.c2_excess).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn worst_b4(&self) -> f64 {
        self.rows.iter().map(|r| r.b4_product).fold(0.0, f64::max)
    }
}

/// `(H - z - i eps K)^{-1}` for a Hermitian `K`.
fn damped_inverse(h: &HermitianOperator, z: C64, eps: f64, k: &Mat<C64>) -> Result<Mat<C64>> {
    let n = h.dim();
    let shifted = Mat::from_fn(n, n, |i, j| {
        let mut v = h.matrix()[(i, j)] - C64::new(0.0, eps) * k[(i, j)];
        if i == j {
            v -= z;
        }
        v
    });
    linalg::inverse(shifted.as_ref())
}

/// Relative excess `(lhs - rhs) / rhs` of `|Q G X B| <= eps^{-1/2} |B X^* G X B|^{1/2}`,
/// worst case over the contractions and over `Q in {M, 0.8 V M}`.
fn sandwich_excess(
    m: &Mat<C64>,
    rotated: &Mat<C64>,
    g_right: &Mat<C64>,
    g_both: &Mat<C64>,
    contractions: &[Mat<C64>],
    eps: f64,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for b in contractions {
        let gb = g_right * b;
        let rhs = (operator_norm((b * g_both * b).as_ref())? / eps).sqrt();
        for q in [m, rotated] {
            let lhs = operator_norm((q * &gb).as_ref())?;
            worst = worst.max((lhs - rhs) / rhs.max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

pub fn regularized_diagnostics(
    h: &HermitianOperator,
    a: &HermitianOperator,
    spec: &CutoffSpec,
    eps_grid: &[f64],
    p: &RegularizedParams,
) -> Result<RegularizedTrace> {
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(invalid("eps_grid", "needs values in (0, 1]"));
    }
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("eps_grid", "must be ascending"));
    }
    if !(p.mu > 0.0) {
        return Err(invalid("mu", "must be positive"));
    }
    if !(p.c0 > 0.0 && p.c2 >= 0.0 && p.delta >= 1.0) {
        return Err(invalid("constants", "need c0 > 0, c2 >= 0, delta >= 1"));
    }
    if !(0.0..=0.5).contains(&p.beta) {
        return Err(invalid("beta", "must lie in [0, 1/2]"));
    }
    let n = h.dim();
    let phi = cutoff_operator(h, spec)?;
    let b = commutator_i(h, a)?;
    let b_norm = operator_norm(b.matrix())?;
    let phi_m = phi.matrix();
    let (m, m_sq, clamp) = psd_sqrt(phi_m * b.matrix() * phi_m, b_norm)?;
    let m_sq_norm = operator_norm(m_sq.as_ref())?;

    let z_op = h.apply_function(|l| (1.0 + l * l).powf(p.beta / 2.0))?;
    let zm = z_op.matrix();
    let (m_beta, m_beta_sq, clamp_beta) = psd_sqrt(phi_m * zm * b.matrix() * zm * phi_m, b_norm)?;

    let mut r = rng(p.seed);
    let contractions: Vec<Mat<C64>> = (0..p.contractions).map(|_| random_contraction_with(&mut r, n)).collect();
    let v = random_matrix_with(&mut r, n, n).qr().compute_Q();
    let shrink = faer::Scale(c(0.8));
    let rotated = &v * &m * shrink;
    let rotated_beta = &v * &m_beta * shrink;

    let z = C64::new(p.lambda, p.mu);
    let g0 = h.resolvent(z)?;
    let g0_norm = operator_norm(g0.as_ref())?;
    let phi_minus_one = phi_m - linalg::identity(n);

    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let g = damped_inverse(h, z, eps, &m_sq)?;
        let g_norm = operator_norm(g.as_ref())?;

        let b2_excess = sandwich_excess(&m, &rotated, &g, &g, &contractions, eps)?;
        let b3_ratio = g_norm * p.c0 * eps / p.delta;
        let b4_product = operator_norm((&phi_minus_one * &g).as_ref())? * spec.r;
        let diff = operator_norm((&g - &g0).as_ref())?;
        let bound = eps * m_sq_norm * g_norm * g0_norm;
        let resolvent_identity_excess = (diff - bound) / bound.max(f64::MIN_POSITIVE);

        let f = |e: f64, g: &Mat<C64>| -> Result<Mat<C64>> {
            let w = a.apply_function(weight_fn(p.s, e))?;
            Ok(w.matrix() * g * w.matrix())
        };
        let f_norm = operator_norm(f(eps, &g)?.as_ref())?;
        let step = eps / 100.0;
        let f_plus = f(eps + step, &damped_inverse(h, z, eps + step, &m_sq)?)?;
        let f_minus = f(eps - step, &damped_inverse(h, z, eps - step, &m_sq)?)?;
        let f_prime = (f_plus - f_minus) * faer::Scale(c(0.5 / step));
        let f_prime_norm = operator_norm(f_prime.as_ref())?;
        let s = p.s;
        let f_prime_envelope = 2.0 * p.delta * (2.0 - s) * c_of_s(s) * p.c0.powf(-0.5) * eps.powf(s - 1.5) * f_norm.sqrt()
            + p.delta * p.c2 / p.c0 * f_norm;

        let g_beta = damped_inverse(h, z, eps, &m_beta_sq)?;
        let g_right = &g_beta * zm;
        let g_both = zm * &g_right;
        let decay = (p.mu * p.mu / p.lambda.abs().powf(4.0 * p.beta) + eps * eps).sqrt();
        let decay_ratio = operator_norm(g_both.as_ref())? * decay;
        let c2_excess = sandwich_excess(&m_beta, &rotated_beta, &g_right, &g_both, &contractions, eps)?;

        rows.push(EpsilonRow {
            eps,
            b2_excess,
            b3_ratio,
            b4_product,
            resolvent_identity_excess,
            f_norm,
            f_prime_norm,
            f_prime_envelope,
            f_prime_slack: (f_prime_norm - f_prime_envelope).max(0.0),
            decay_ratio,
            c2_excess,
        });
    }
    Ok(RegularizedTrace {
        r: spec.r,
        params: *p,
        clamp,
        clamp_beta,
        rows,
    })
}
