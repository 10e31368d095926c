//! Smooth high-energy cutoffs built from the `exp(-1/t)` smooth step.

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ensemble_norm, Ensemble};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, C64};
use crate::operator::HermitianOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// ramp from `R` to `2R`
    Mourre,
    /// ramp from `4R` to `5R`
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    pub r: f64,
    pub kind: CutoffKind,
}

/// `exp(-1/t) / (exp(-1/t) + exp(-1/(1-t)))`, clamped to 0 and 1 outside (0, 1).
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        // divide through by exp(-1/t) to stay finite near the ends
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let e = (1.0 / t - 1.0 / (1.0 - t)).exp();
    if !e.is_finite() {
        return 0.0;
    }
    let w = 1.0 / t.powi(2) + 1.0 / (1.0 - t).powi(2);
    e * w / (1.0 + e).powi(2)
}

impl CutoffSpec {
    pub fn mourre(r: f64) -> Self {
        Self {
            r,
            kind: CutoffKind::Mourre,
        }
    }

    pub fn tilde(r: f64) -> Self {
        Self {
            r,
            kind: CutoffKind::Tilde,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(invalid("cutoff.R", "must be positive"));
        }
        Ok(())
    }

    /// `(start, end)` of the positive ramp.
    pub fn ramp(&self) -> (f64, f64) {
        match self.kind {
            CutoffKind::Mourre => (self.r, 2.0 * self.r),
            CutoffKind::Tilde => (4.0 * self.r, 5.0 * self.r),
        }
    }

    /// Where the cutoff reaches 1.
    pub fn plateau_start(&self) -> f64 {
        self.ramp().1
    }

    pub fn value(&self, s: f64) -> f64 {
        let (lo, hi) = self.ramp();
        smooth_step((s.abs() - lo) / (hi - lo))
    }

    /// `d phi / ds` for `s >= 0` (odd continuation for negative `s`).
    pub fn derivative(&self, s: f64) -> f64 {
        let (lo, hi) = self.ramp();
        s.signum() * smooth_step_prime((s.abs() - lo) / (hi - lo)) / (hi - lo)
    }

    pub fn function(&self) -> impl Fn(f64) -> f64 + '_ {
        move |s| self.value(s)
    }

    /// Maxima of `|phi'|` and `|phi''|` over the ramp, sampled on 10^5
    /// points; `phi''` by central differences of the closed-form `phi'`.
    pub fn derivative_bounds(&self) -> DerivativeBounds {
        let (lo, hi) = self.ramp();
        let n = 100_000;
        let w = hi - lo;
        let step = w / n as f64;
        let h = step / 10.0;
        let mut first: f64 = 0.0;
        let mut second: f64 = 0.0;
        for i in 1..n {
            let s = lo + i as f64 * step;
            first = first.max(self.derivative(s).abs());
            let d2 = (self.derivative(s + h) - self.derivative(s - h)) / (2.0 * h);
            second = second.max(d2.abs());
        }
        DerivativeBounds {
            r: self.r,
            max_first: first,
            max_second: second,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeBounds {
    pub r: f64,
    pub max_first: f64,
    pub max_second: f64,
}

/// `phi(H)`.
pub fn cutoff_operator(h: &HermitianOperator, spec: &CutoffSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    h.apply_function(spec.function())
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorScanRow {
    pub r: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorScan {
    pub rows: Vec<CommutatorScanRow>,
    /// least-squares slope of `log norm` against `log R`
    pub exponent: Option<f64>,
}

/// Ensemble norm of `[phi_R(H), A]` for each `R`, sorted by `R`.
pub fn cutoff_commutator_scan(
    h: &HermitianOperator,
    a: MatRef<'_, C64>,
    r_list: &[f64],
    ensemble: &Ensemble,
) -> Result<CommutatorScan> {
    let top = h.spectral_radius();
    let mut rs = r_list.to_vec();
    rs.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(rs.len());
    for r in rs {
        let spec = CutoffSpec::mourre(r);
        spec.validate()?;
        if 2.0 * r > top {
            return Err(Error::CutoffOutOfReach { r, spectral_max: top });
        }
        let phi = cutoff_operator(h, &spec)?;
        let comm = linalg::commutator(phi.matrix(), a);
        rows.push(CommutatorScanRow {
            r,
            norm: ensemble_norm(comm.as_ref(), ensemble)?,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.r).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    Ok(CommutatorScan {
        exponent: power_law_exponent(&xs, &ys),
        rows,
    })
}

/// Least-squares slope in log-log coordinates. Pairs with a non-positive
/// value are skipped; `None` with fewer than two usable pairs.
pub fn power_law_exponent(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::EnsembleSpec;
    use crate::grid::GridSpace;
    use crate::operator::fourier_function;
    use crate::random::random_hermitian;

    #[test]
    fn mourre_support_and_midpoint() {
        let c = CutoffSpec::mourre(10.0);
        assert_eq!(c.value(10.0), 0.0);
        assert_eq!(c.value(20.0), 1.0);
        assert!((c.value(15.0) - 0.5).abs() < 1e-15);
        assert_eq!(c.value(-15.0), c.value(15.0));
    }

    #[test]
    fn tilde_support() {
        let c = CutoffSpec::tilde(10.0);
        assert_eq!(c.value(39.0), 0.0);
        assert_eq!(c.value(51.0), 1.0);
        assert_eq!(c.value(-51.0), 1.0);
    }

    #[test]
    fn steepest_slope_is_at_the_midpoint() {
        // sigma'(1/2) = 2 for this smooth step, so max phi' = 2 / R
        assert!((smooth_step_prime(0.5) - 2.0).abs() < 1e-14);
        let b = CutoffSpec::mourre(10.0).derivative_bounds();
        assert!((b.max_first - 0.2).abs() < 0.2 * 0.01, "{}", b.max_first);
        let b2 = CutoffSpec::mourre(20.0).derivative_bounds();
        assert!((b.max_first / b2.max_first - 2.0).abs() < 1e-6);
        assert!((b.max_second / b2.max_second - 4.0).abs() < 1e-3);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = CutoffSpec::mourre(3.0);
        for s in [3.2, 4.1, 4.5, 5.7] {
            let fd = (c.value(s + 1e-6) - c.value(s - 1e-6)) / 2e-6;
            assert!((fd - c.derivative(s)).abs() < 1e-6);
            assert!(c.derivative(s) > 0.0);
        }
    }

    #[test]
    fn pointwise_invariants_on_a_fine_scan() {
        for spec in [CutoffSpec::mourre(2.5), CutoffSpec::tilde(2.5)] {
            let (lo, hi) = spec.ramp();
            let r = spec.r;
            for i in 0..=10_000 {
                let s = -6.0 * r + 12.0 * r * i as f64 / 10_000.0;
                let v = spec.value(s);
                assert!((0.0..=1.0).contains(&v));
                assert_eq!(v, spec.value(-s));
                if s.abs() <= lo {
                    assert_eq!(v, 0.0);
                }
                if s.abs() >= hi {
                    assert_eq!(v, 1.0);
                }
                if s > lo && s < hi {
                    assert!(spec.derivative(s) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn cutoff_operator_properties() {
        let h = HermitianOperator::new(random_hermitian(40, 4) * faer::Scale(linalg::c(20.0))).unwrap();
        let spec = CutoffSpec::mourre(3.0);
        let phi = cutoff_operator(&h, &spec).unwrap();
        let comm = linalg::commutator(phi.matrix(), h.matrix());
        assert!(crate::norm::operator_norm(comm.as_ref()).unwrap() <= 1e-9 * h.spectral_radius());
        assert!(phi.eigenvalues().iter().all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)));

        let high = HermitianOperator::diagonal(&[7.0, 8.0, 100.0]).unwrap();
        let phi = cutoff_operator(&high, &spec).unwrap();
        let err = linalg::frobenius((phi.matrix() - linalg::identity(3)).as_ref());
        assert!(err < 1e-10);
    }

    #[test]
    fn tilde_sits_inside_mourre_plateau() {
        let h = HermitianOperator::new(random_hermitian(30, 8) * faer::Scale(linalg::c(80.0))).unwrap();
        let m = cutoff_operator(&h, &CutoffSpec::mourre(4.0)).unwrap();
        let t = cutoff_operator(&h, &CutoffSpec::tilde(4.0)).unwrap();
        let prod = m.matrix() * t.matrix();
        assert!(linalg::frobenius((prod - t.matrix()).as_ref()) < 1e-10);
    }

    #[test]
    fn commuting_scans_vanish() {
        let g = GridSpace::new(128, 16.0 * std::f64::consts::PI).unwrap();
        let h = fourier_function(&g, |k| k * k);
        let e = EnsembleSpec::default_for(&g).build(&g).unwrap();
        let id = linalg::identity(128);
        let scan = cutoff_commutator_scan(&h, id.as_ref(), &[4.0, 2.0], &e).unwrap();
        assert_eq!(scan.rows[0].r, 2.0);
        assert!(scan.rows.iter().all(|r| r.norm < 1e-12));
        let g2 = fourier_function(&g, |k| k / (1.0 + k * k));
        let scan = cutoff_commutator_scan(&h, g2.matrix(), &[2.0, 4.0], &e).unwrap();
        assert!(scan.rows.iter().all(|r| r.norm <= 1e-10));
        let too_big = cutoff_commutator_scan(&h, id.as_ref(), &[1e4], &e);
        assert!(matches!(too_big, Err(Error::CutoffOutOfReach { .. })));
    }

    #[test]
    fn exponent_fit() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert!((power_law_exponent(&xs, &ys).unwrap() + 1.5).abs() < 1e-12);
        assert!(power_law_exponent(&[1.0], &[1.0]).is_none());
    }
}
