//! Fractional Schroedinger-type model `H = a (p^2 + b^2)^gamma + V` and its
//! regularized dilation generator `A = G x + x G`, `G = p (1 + p^2 + b^2)^-gamma`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::GridSpace;
use crate::linalg::{self, C64};
use crate::operator::{self, HermitianOperator};

/// Overall factor in front of `G x + x G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Full,
    /// `A/2`, which halves every commutator.
    Half,
}

impl Normalization {
    pub fn factor(self) -> f64 {
        match self {
            Normalization::Full => 1.0,
            Normalization::Half => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    /// `V(x) = amplitude <x>^-rho`.
    BracketDecay { amplitude: f64, rho: f64 },
    /// Grid samples, one per point.
    Custom { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::BracketDecay { amplitude, rho } => {
                if !amplitude.is_finite() {
                    return Err(invalid("potential.amplitude", "must be finite"));
                }
                if !(rho.is_finite() && *rho > 0.0) {
                    return Err(invalid("potential.rho", "decay rate must be positive"));
                }
                Ok(())
            }
            PotentialSpec::Custom { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("potential.values", "entries must be finite"));
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, grid: &GridSpace) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            PotentialSpec::Zero => Ok(vec![0.0; grid.len()]),
            PotentialSpec::BracketDecay { amplitude, rho } => Ok(grid
                .coordinates()
                .iter()
                .map(|&x| amplitude * (1.0 + x * x).powf(-rho / 2.0))
                .collect()),
            PotentialSpec::Custom { values } => {
                if values.len() != grid.len() {
                    return Err(invalid(
                        "potential.values",
                        format!("expected {} samples, got {}", grid.len(), values.len()),
                    ));
                }
                Ok(values.clone())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::BracketDecay { amplitude, .. } => *amplitude == 0.0,
            PotentialSpec::Custom { values } => values.iter().all(|v| *v == 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub normalization: Normalization,
}

impl ModelSpec {
    /// Free model with `V = 0` and full normalization.
    pub fn free(a: f64, b: f64, gamma: f64) -> Self {
        Self {
            a,
            b,
            gamma,
            potential: PotentialSpec::Zero,
            normalization: Normalization::Full,
        }
    }

    pub fn with_potential(mut self, potential: PotentialSpec) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(invalid("model.a", "must be positive"));
        }
        if !self.b.is_finite() {
            return Err(invalid("model.b", "must be finite"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.5) {
            return Err(invalid("model.gamma", "must be at least 1/2"));
        }
        self.potential.validate()
    }

    /// Dispersion `h(k) = a (k^2 + b^2)^gamma`.
    pub fn h(&self, k: f64) -> f64 {
        self.a * (k * k + self.b * self.b).powf(self.gamma)
    }

    /// Group velocity `h'(k)`.
    pub fn h_prime(&self, k: f64) -> f64 {
        let q = k * k + self.b * self.b;
        if k == 0.0 {
            return 0.0;
        }
        2.0 * self.gamma * self.a * k * q.powf(self.gamma - 1.0)
    }

    /// `g(k) = k (1 + k^2 + b^2)^-gamma`.
    pub fn g(&self, k: f64) -> f64 {
        k * (1.0 + k * k + self.b * self.b).powf(-self.gamma)
    }

    /// Leading symbol of `i[H, A]` for `V = 0`: `2 g(k) h'(k)` times the
    /// normalization factor.
    pub fn commutator_symbol(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        let q = k * k + self.b * self.b;
        let full = 4.0
            * self.gamma
            * self.a
            * k
            * k
            * q.powf(self.gamma - 1.0)
            * (1.0 + q).powf(-self.gamma);
        full * self.normalization.factor()
    }

    /// High-momentum limit of the commutator symbol, `4 gamma a` (scaled).
    pub fn c_tilde(&self) -> f64 {
        4.0 * self.gamma * self.a * self.normalization.factor()
    }

    /// Nonnegative momentum with `h(k) = lambda`, or `None` below the band
    /// bottom `a |b|^{2 gamma}`.
    pub fn inverse_h(&self, lambda: f64) -> Option<f64> {
        let q = (lambda / self.a).powf(1.0 / self.gamma) - self.b * self.b;
        if lambda.is_nan() || lambda < 0.0 || q < -1e-12 * (1.0 + self.b * self.b) {
            None
        } else {
            Some(q.max(0.0).sqrt())
        }
    }
}

pub fn hamiltonian(grid: &GridSpace, m: &ModelSpec) -> Result<HermitianOperator> {
    m.validate()?;
    let free = operator::fourier_function(grid, |k| m.h(k));
    if m.potential.is_zero() {
        return Ok(free);
    }
    let v = m.potential.sample(grid)?;
    let mut matrix = free.into_matrix();
    for (j, vj) in v.iter().enumerate() {
        matrix[(j, j)] += linalg::c(*vj);
    }
    HermitianOperator::new(matrix)
}

/// `G X + X G` (times the normalization factor), symmetrized. The recorded
/// hermiticity defect is that of the unsymmetrized product sum.
pub fn conjugate_operator(grid: &GridSpace, m: &ModelSpec) -> Result<HermitianOperator> {
    m.validate()?;
    let g = linalg::fourier_multiplier(grid, |k| m.g(k));
    let x: Vec<C64> = grid.coordinates().iter().map(|&x| linalg::c(x)).collect();
    let gx = linalg::scale_columns(g.as_ref(), &x);
    let xg = linalg::scale_rows(g.as_ref(), &x);
    let f = m.normalization.factor();
    HermitianOperator::symmetrized((gx + xg) * faer::Scale(linalg::c(f)))
}

/// `<H>^{2 beta} A + A <H>^{2 beta}`.
pub fn build_p(h: &HermitianOperator, a: &HermitianOperator, beta: f64) -> Result<HermitianOperator> {
    if !(0.0..=0.5).contains(&beta) {
        return Err(invalid("beta", "must lie in [0, 1/2]"));
    }
    if h.dim() != a.dim() {
        return Err(crate::Error::DimensionMismatch {
            expected: h.dim(),
            found: a.dim(),
        });
    }
    let z2 = h.apply_function(|l| (1.0 + l * l).powf(beta))?;
    let za = z2.matrix() * a.matrix();
    let az = a.matrix() * z2.matrix();
    HermitianOperator::new(za + az)
}

/// `<x>^-s <p>^theta`.
pub fn applied_weight(grid: &GridSpace, s: f64, theta: f64) -> Mat<C64> {
    let p_part = linalg::fourier_multiplier(grid, |k| (1.0 + k * k).powf(theta / 2.0));
    let x_part: Vec<C64> = grid
        .coordinates()
        .iter()
        .map(|&x| linalg::c((1.0 + x * x).powf(-s / 2.0)))
        .collect();
    linalg::scale_rows(p_part.as_ref(), &x_part)
}

/// `H = p`, whose high-energy resolvent does not decay.
pub fn translation_model(grid: &GridSpace) -> HermitianOperator {
    operator::momentum_operator(grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolBoundRow {
    pub order: usize,
    /// sup of `<x>^{rho+alpha} |d^alpha V|` over the inner half of the bulk
    pub inner_sup: f64,
    /// the same over the outer half
    pub outer_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolBoundCheck {
    pub rows: Vec<SymbolBoundRow>,
    pub max_growth: f64,
    pub pass: bool,
}

/// Growth allowed from the inner to the outer bulk for a weighted derivative
/// to count as bounded.
pub const SYMBOL_GROWTH_LIMIT: f64 = 1.5;

/// Finite-difference check of `|<x>^{rho+alpha} d^alpha V| <= C_alpha` for
/// `alpha <= 4` on the bulk `|x| <= L/2 (1 - 2 margin)`. Only meaningful for
/// bracket-decay potentials; returns `None` otherwise.
pub fn potential_symbol_check(grid: &GridSpace, m: &ModelSpec, margin: f64) -> Result<Option<SymbolBoundCheck>> {
    let rho = match m.potential {
        PotentialSpec::BracketDecay { rho, .. } => rho,
        _ => return Ok(None),
    };
    let v = m.potential.sample(grid)?;
    let h = grid.spacing();
    let x = grid.coordinates();
    let half = grid.bulk_half_width(margin);
    // central-difference stencils for orders 0..=4 (second-order accurate)
    let stencils: [&[f64]; 5] = [
        &[0.0, 0.0, 1.0, 0.0, 0.0],
        &[0.0, -0.5, 0.0, 0.5, 0.0],
        &[0.0, 1.0, -2.0, 1.0, 0.0],
        &[-0.5, 1.0, 0.0, -1.0, 0.5],
        &[1.0, -4.0, 6.0, -4.0, 1.0],
    ];
    let mut rows = Vec::new();
    let mut max_growth: f64 = 0.0;
    for (order, st) in stencils.iter().enumerate() {
        let scale = h.powi(order as i32);
        let (mut inner, mut outer) = (0.0f64, 0.0f64);
        for j in 2..grid.len() - 2 {
            if x[j].abs() > half {
                continue;
            }
            let d: f64 = st.iter().enumerate().map(|(o, w)| w * v[j + o - 2]).sum::<f64>() / scale;
            let q = (1.0 + x[j] * x[j]).powf((rho + order as f64) / 2.0) * d.abs();
            if x[j].abs() <= half / 2.0 {
                inner = inner.max(q);
            } else {
                outer = outer.max(q);
            }
        }
        let growth = if inner > 0.0 { outer / inner } else { 0.0 };
        max_growth = max_growth.max(growth);
        rows.push(SymbolBoundRow {
            order,
            inner_sup: inner,
            outer_sup: outer,
        });
    }
    Ok(Some(SymbolBoundCheck {
        rows,
        max_growth,
        pass: max_growth <= SYMBOL_GROWTH_LIMIT,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::wave_packet;
    use std::f64::consts::PI;

    #[test]
    fn free_laplacian_spectrum() {
        let g = GridSpace::new(8, 2.0 * PI).unwrap();
        let h = hamiltonian(&g, &ModelSpec::free(1.0, 0.0, 1.0)).unwrap();
        let fresh = HermitianOperator::new(h.matrix().to_owned()).unwrap();
        let expected = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0, 16.0];
        for (l, e) in fresh.eigenvalues().iter().zip(expected) {
            assert!((l - e).abs() < 1e-10, "{l} vs {e}");
        }
    }

    #[test]
    fn relativistic_band_bottom() {
        let g = GridSpace::new(16, 2.0 * PI).unwrap();
        let h = hamiltonian(&g, &ModelSpec::free(2.0, 1.0, 0.5)).unwrap();
        assert!((h.eigenvalues()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weak_potential_shifts_spectrum_boundedly() {
        let g = GridSpace::new(64, 8.0 * PI).unwrap();
        let free = hamiltonian(&g, &ModelSpec::free(1.0, 0.0, 1.0)).unwrap();
        let pot = PotentialSpec::BracketDecay { amplitude: 0.1, rho: 2.0 };
        let h = hamiltonian(&g, &ModelSpec::free(1.0, 0.0, 1.0).with_potential(pot)).unwrap();
        for (a, b) in h.eigenvalues().iter().zip(free.eigenvalues()) {
            assert!(a - b >= -1e-10 && a - b <= 0.1 + 1e-10);
        }
    }

    #[test]
    fn rejects_small_gamma() {
        let g = GridSpace::new(16, 1.0).unwrap();
        assert!(hamiltonian(&g, &ModelSpec::free(1.0, 0.0, 0.4)).is_err());
        assert!(hamiltonian(&g, &ModelSpec::free(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn symbol_values() {
        let m = ModelSpec::free(1.0, 0.0, 1.0);
        assert!((m.commutator_symbol(3.0) - 3.6).abs() < 1e-12);
        assert_eq!(m.commutator_symbol(0.0), 0.0);
        assert!((m.commutator_symbol(1e6) - m.c_tilde()).abs() < 1e-9);
        assert_eq!(m.c_tilde(), 4.0);
        let half = m.clone().with_normalization(Normalization::Half);
        assert!((half.commutator_symbol(3.0) - 1.8).abs() < 1e-12);
        // 2 g h' agrees with the closed form
        for m in [ModelSpec::free(1.3, 0.7, 0.5), ModelSpec::free(0.5, 1.0, 2.0)] {
            for k in [0.3, 2.0, 7.5] {
                let direct = 2.0 * m.g(k) * m.h_prime(k);
                assert!((direct - m.commutator_symbol(k)).abs() < 1e-12 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn inverse_dispersion() {
        let m = ModelSpec::free(2.0, 0.5, 1.5);
        for k in [0.0, 0.4, 3.0, 11.0] {
            let back = m.inverse_h(m.h(k)).unwrap();
            assert!((back - k).abs() < 1e-9 * (1.0 + k));
        }
        assert!(m.inverse_h(0.1).is_none());
    }

    #[test]
    fn p_toy_matrix() {
        let h = HermitianOperator::diagonal(&[0.0, 3f64.sqrt()]).unwrap();
        let mut am = linalg::identity(2) * faer::Scale(linalg::c(0.0));
        am[(0, 1)] = linalg::c(1.0);
        am[(1, 0)] = linalg::c(1.0);
        let a = HermitianOperator::new(am).unwrap();
        let p = build_p(&h, &a, 0.5).unwrap();
        // <H>^{2 beta} = <H> = diag(1, 2) at beta = 1/2
        assert!((p.matrix()[(0, 1)].re - 3.0).abs() < 1e-12);
        assert!((p.matrix()[(1, 0)].re - 3.0).abs() < 1e-12);
        assert!(p.matrix()[(0, 0)].norm() < 1e-12);
        let p0 = build_p(&h, &a, 0.0).unwrap();
        assert!((p0.matrix()[(0, 1)].re - 2.0).abs() < 1e-12);
        assert!(build_p(&h, &a, 0.6).is_err());
    }

    #[test]
    fn conjugate_operator_defect_is_roundoff() {
        let g = GridSpace::new(128, 16.0 * PI).unwrap();
        let a = conjugate_operator(&g, &ModelSpec::free(1.0, 0.0, 1.0)).unwrap();
        let scale = linalg::frobenius(a.matrix());
        assert!(a.hermiticity_defect() <= 1e-10 * scale);
    }

    #[test]
    fn theta_zero_weight_is_diagonal() {
        let g = GridSpace::new(32, 10.0).unwrap();
        let w = applied_weight(&g, 1.5, 0.0);
        for j in 0..32 {
            let x = g.coordinates()[j];
            assert!((w[(j, j)].re - (1.0 + x * x).powf(-0.75)).abs() < 1e-12);
            assert!(w[(j, (j + 1) % 32)].norm() < 1e-12);
        }
    }

    #[test]
    fn weight_factorizes_on_narrow_band_packets() {
        let g = GridSpace::new(512, 64.0 * PI).unwrap();
        let w = applied_weight(&g, 1.0, 0.5);
        let sigma = g.length() / 32.0;
        let k0 = 5.0;
        let psi = wave_packet(&g, 0.0, k0, sigma).unwrap();
        let wpsi = linalg::vec_norm(&linalg::matvec(w.as_ref(), psi.amplitudes()));
        let env: f64 = psi
            .amplitudes()
            .iter()
            .zip(g.coordinates())
            .map(|(a, x)| a.norm_sqr() / (1.0 + x * x))
            .sum::<f64>()
            .sqrt();
        let predicted = (1.0 + k0 * k0).powf(0.25) * env;
        assert!(((wpsi - predicted) / predicted).abs() < 0.05);
        let bound = (1.0 + g.k_max().powi(2)).powf(0.25);
        assert!(crate::norm::operator_norm(w.as_ref()).unwrap() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn bracket_potential_passes_symbol_check() {
        let g = GridSpace::new(1024, 64.0 * PI).unwrap();
        let m = ModelSpec::free(1.0, 0.0, 1.0)
            .with_potential(PotentialSpec::BracketDecay { amplitude: 0.5, rho: 2.0 });
        let check = potential_symbol_check(&g, &m, 0.25).unwrap().unwrap();
        assert!(check.pass, "{check:?}");
        assert!(potential_symbol_check(&g, &ModelSpec::free(1.0, 0.0, 1.0), 0.25)
            .unwrap()
            .is_none());
    }

    #[test]
    fn translation_model_shift() {
        let g = GridSpace::new(64, 12.0).unwrap();
        let p = translation_model(&g);
        let m = 3usize;
        let dk = 2.0 * PI * m as f64 / g.length();
        let k = g.wavenumbers()[20];
        let v: Vec<C64> = g.coordinates().iter().map(|&x| C64::cis(k * x)).collect();
        let shifted: Vec<C64> = v
            .iter()
            .zip(g.coordinates())
            .map(|(a, &x)| a * C64::cis(dk * x))
            .collect();
        let pv = p.apply(&shifted);
        let err = pv
            .iter()
            .zip(&shifted)
            .map(|(a, b)| (a - b * (k + dk)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }
}
