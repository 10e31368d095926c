//! Commutators, the `c I + J + K` split and the numeric condition checks.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::cutoff::{cutoff_operator, CutoffSpec};
use crate::ensemble::{ensemble_norm, Ensemble};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, C64, I};
use crate::model::ModelSpec;
use crate::norm::operator_norm;
use crate::operator::HermitianOperator;

/// Packets whose cutoff projection is shorter than this are dropped from the
/// Rayleigh quotients.
pub const FILTER_FLOOR: f64 = 1e-6;

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// `i (H A - A H)` without symmetrization.
pub fn commutator_i_matrix(h: MatRef<'_, C64>, a: MatRef<'_, C64>) -> Result<Mat<C64>> {
    check_dims(h.nrows(), a.nrows())?;
    check_dims(h.ncols(), a.ncols())?;
    Ok(linalg::commutator(h, a) * faer::Scale(I))
}

/// `i (H A - A H)`.
pub fn commutator_i(h: &HermitianOperator, a: &HermitianOperator) -> Result<HermitianOperator> {
    HermitianOperator::symmetrized(commutator_i_matrix(h.matrix(), a.matrix())?)
}

/// `ad^1 = i[H, A]`, `ad^k = i[ad^{k-1}, A]` for `k` up to 4.
pub fn iterated_ad(h: &HermitianOperator, a: &HermitianOperator, k: usize) -> Result<HermitianOperator> {
    if !(1..=4).contains(&k) {
        return Err(invalid("k", "iterated commutators are available for k = 1..4"));
    }
    let mut current = commutator_i(h, a)?;
    for _ in 1..k {
        current = commutator_i(&current, a)?;
    }
    Ok(current)
}

/// All of `ad^1 .. ad^k` in one pass.
pub fn ad_sequence(h: &HermitianOperator, a: &HermitianOperator, k: usize) -> Result<Vec<HermitianOperator>> {
    if !(1..=4).contains(&k) {
        return Err(invalid("k", "iterated commutators are available for k = 1..4"));
    }
    let mut out = vec![commutator_i(h, a)?];
    for _ in 1..k {
        let next = commutator_i(out.last().expect("nonempty"), a)?;
        out.push(next);
    }
    Ok(out)
}

/// `B = c I + J(H) + K` with `K` defined as the residual.
#[derive(Debug, Clone)]
pub struct JKSplit {
    pub c_tilde: f64,
    pub b: HermitianOperator,
    pub j: HermitianOperator,
    pub k: HermitianOperator,
}

/// `j(lambda)`: the free commutator symbol minus its limit, read as a
/// function of energy through `lambda = h(k)`. Energies below the band bottom
/// are clamped to it.
pub fn j_symbol(m: &ModelSpec, lambda: f64) -> f64 {
    let bottom = m.h(0.0);
    let k = m.inverse_h(lambda.max(bottom)).unwrap_or(0.0);
    m.commutator_symbol(k) - m.c_tilde()
}

pub fn split_jk(h: &HermitianOperator, a: &HermitianOperator, m: &ModelSpec) -> Result<JKSplit> {
    let b = commutator_i(h, a)?;
    split_jk_with(h, b, m)
}

/// Same as [`split_jk`] when `B` is already known.
pub fn split_jk_with(h: &HermitianOperator, b: HermitianOperator, m: &ModelSpec) -> Result<JKSplit> {
    m.validate()?;
    let c_tilde = m.c_tilde();
    let j = h.apply_function(|l| j_symbol(m, l))?;
    let mut k = b.matrix() - j.matrix();
    for i in 0..k.nrows() {
        k[(i, i)] -= linalg::c(c_tilde);
    }
    let k = HermitianOperator::symmetrized(k)?;
    Ok(JKSplit { c_tilde, b, j, k })
}

impl JKSplit {
    /// `c I + J + K - B` in Frobenius norm (zero up to round-off).
    pub fn reconstruction_error(&self) -> f64 {
        let mut m = self.j.matrix() + self.k.matrix() - self.b.matrix();
        for i in 0..m.nrows() {
            m[(i, i)] += linalg::c(self.c_tilde);
        }
        linalg::frobenius(m.as_ref())
    }

    /// `|J phi_R(H)|`, exact because both are functions of `H`.
    pub fn restricted_j_norm(&self, h: &HermitianOperator, m: &ModelSpec, spec: &CutoffSpec) -> f64 {
        h.eigenvalues()
            .iter()
            .map(|&l| (j_symbol(m, l) * spec.value(l)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict {
    pub condition: String,
    pub verdict: Verdict,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub note: String,
}

impl ConditionVerdict {
    fn new(condition: &str, verdict: Verdict, measured: Option<f64>, threshold: Option<f64>, note: &str) -> Self {
        Self {
            condition: condition.to_string(),
            verdict,
            measured,
            threshold,
            note: note.to_string(),
        }
    }

    fn bounded(condition: &str, ensemble: f64, full: f64, note: &str) -> Self {
        let ok = ensemble.is_finite() && full.is_finite();
        Self::new(condition, Verdict::from_bool(ok), Some(ensemble), None, note)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// smallest acceptable Mourre constant
    pub c0_min: f64,
    /// `delta_K` must stay below this multiple of `c0`
    pub delta_ratio: f64,
    /// relative slack allowed when checking `c0 <= c_tilde <= c1`
    pub c_tilde_slack: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            c0_min: 0.1,
            delta_ratio: 0.1,
            c_tilde_slack: 0.05,
        }
    }
}

/// Measured constants. Seam-sensitive quantities carry both the packet
/// (bulk) value, which drives the verdict, and the full-matrix norm.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub r: f64,
    pub beta: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c2_full: f64,
    pub c_tilde: f64,
    pub norm_b: f64,
    pub norm_b_full: f64,
    pub norm_ad2: f64,
    pub norm_ad3: f64,
    pub norm_ad4: f64,
    pub norm_ad2_full: f64,
    pub norm_ad3_full: f64,
    pub norm_ad4_full: f64,
    pub norm_h_b: f64,
    pub norm_h_b_full: f64,
    pub delta_k: f64,
    pub delta_k_full: f64,
    pub j_h_commutator: f64,
    pub cond_i_norm: f64,
    pub cond_i_full: f64,
    pub cond_k_norm: f64,
    pub cond_k_full: f64,
    pub packets_used: usize,
    pub packets_total: usize,
    pub verdicts: Vec<ConditionVerdict>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict != Verdict::Fail)
    }

    pub fn verdict(&self, condition: &str) -> Option<Verdict> {
        self.verdicts
            .iter()
            .find(|v| v.condition == condition)
            .map(|v| v.verdict)
    }
}

/// Rayleigh quotients `<phi psi, B phi psi> / |phi psi|^2` over the packets
/// that survive the cutoff; returns `(min, max, count)`.
pub fn mourre_constants(
    b: MatRef<'_, C64>,
    phi: MatRef<'_, C64>,
    ensemble: &Ensemble,
) -> Result<(f64, f64, usize)> {
    let filtered = phi * ensemble.as_columns();
    let images = b * &filtered;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut used = 0;
    for j in 0..filtered.ncols() {
        let v = filtered.col(j);
        let nrm2 = v.squared_norm_l2();
        if nrm2.sqrt() < FILTER_FLOOR {
            continue;
        }
        let q = (v.adjoint() * images.col(j)).re / nrm2;
        lo = lo.min(q);
        hi = hi.max(q);
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyFilteredEnsemble);
    }
    Ok((lo, hi, used))
}

/// Smallest value of the free commutator symbol over in-band momenta whose
/// energy lies on the cutoff plateau `h(k) >= 2R`.
pub fn plateau_symbol_inf(m: &ModelSpec, spec: &CutoffSpec, k_max: f64) -> Option<f64> {
    let start = spec.plateau_start();
    let n = 20_000;
    (0..=n)
        .map(|i| k_max * i as f64 / n as f64)
        .filter(|&k| m.h(k) >= start)
        .map(|k| m.commutator_symbol(k))
        .min_by(f64::total_cmp)
}

pub fn check_assumptions(
    h: &HermitianOperator,
    a: &HermitianOperator,
    m: &ModelSpec,
    spec: &CutoffSpec,
    beta: f64,
    ensemble: &Ensemble,
    thresholds: &Thresholds,
) -> Result<AssumptionReport> {
    if !(0.0..=0.5).contains(&beta) {
        return Err(invalid("beta", "must lie in [0, 1/2]"));
    }
    check_dims(h.dim(), a.dim())?;
    let phi = cutoff_operator(h, spec)?;
    let ads = ad_sequence(h, a, 4)?;
    let b = &ads[0];
    let bulk = |x: MatRef<'_, C64>| ensemble_norm(x, ensemble);
    let full = |x: MatRef<'_, C64>| operator_norm(x);

    let (c0, c1, used) = mourre_constants(b.matrix(), phi.matrix(), ensemble)?;

    // the form equals <u, i[B, A] v>, i.e. ad^2
    let c2 = bulk(ads[1].matrix())?;
    let c2_full = full(ads[1].matrix())?;

    let h_b = commutator_i_matrix(h.matrix(), b.matrix())?;

    let split = split_jk_with(h, b.clone(), m)?;
    let j_h = linalg::commutator(split.j.matrix(), h.matrix());
    let j_h_commutator = full(j_h.as_ref())?;
    let k_phi = split.k.matrix() * phi.matrix();
    let delta_k = bulk(k_phi.as_ref())?;
    let delta_k_full = full(k_phi.as_ref())?;

    let z = h.apply_function(|l| (1.0 + l * l).powf(beta / 2.0))?;
    let zk = linalg::commutator(z.matrix(), split.k.matrix());
    let cond_i = zk * z.matrix() * a.matrix();
    let cond_k = z.matrix() * ads[1].matrix() * z.matrix();

    let report_norms = [
        (bulk(b.matrix())?, full(b.matrix())?),
        (bulk(ads[1].matrix())?, c2_full),
        (bulk(ads[2].matrix())?, full(ads[2].matrix())?),
        (bulk(ads[3].matrix())?, full(ads[3].matrix())?),
        (bulk(h_b.as_ref())?, full(h_b.as_ref())?),
        (bulk(cond_i.as_ref())?, full(cond_i.as_ref())?),
        (bulk(cond_k.as_ref())?, full(cond_k.as_ref())?),
    ];
    let [nb, nad2, nad3, nad4, nhb, ci, ck] = report_norms;

    let c_tilde = split.c_tilde;
    let slack = thresholds.c_tilde_slack * c_tilde;
    let verdicts = vec![
        ConditionVerdict::new(
            "a",
            Verdict::NotApplicable,
            None,
            None,
            "domain statement, vacuous in finite dimensions",
        ),
        ConditionVerdict::new(
            "b",
            Verdict::NotApplicable,
            None,
            None,
            "domain invariance under exp(itA), vacuous in finite dimensions",
        ),
        ConditionVerdict::bounded("c", nb.0, nb.1, "i[H,A] on bulk packets"),
        ConditionVerdict::bounded("d", c2, c2_full, "|[A, B]| on bulk packets"),
        ConditionVerdict::new(
            "e",
            Verdict::from_bool(c0 > thresholds.c0_min && c0 <= c1),
            Some(c0),
            Some(thresholds.c0_min),
            "Mourre constant from cutoff-filtered packets",
        ),
        ConditionVerdict::bounded(
            "f",
            nhb.0,
            nhb.1,
            "i[H, B]; i[B, H] is its negative and is not checked separately",
        ),
        ConditionVerdict::bounded("ad2", nad2.0, nad2.1, "i[B, A]"),
        ConditionVerdict::bounded("ad3", nad3.0, nad3.1, "i[ad2, A]"),
        ConditionVerdict::bounded("ad4", nad4.0, nad4.1, "i[ad3, A]"),
        ConditionVerdict::new(
            "c_tilde",
            Verdict::from_bool(c0 <= c_tilde + slack && c_tilde <= c1 + slack),
            Some(c_tilde),
            Some(slack),
            "c0 <= c_tilde <= c1 up to the band-limited slack",
        ),
        ConditionVerdict::new(
            "g",
            Verdict::from_bool(delta_k < thresholds.delta_ratio * c0),
            Some(delta_k),
            Some(thresholds.delta_ratio * c0),
            "|K phi(H)| on bulk packets",
        ),
        ConditionVerdict::new(
            "h",
            Verdict::from_bool(
                j_h_commutator <= 1e-9 * split.j.spectral_radius().max(1.0) * h.spectral_radius().max(1.0),
            ),
            Some(j_h_commutator),
            None,
            "J is a function of H",
        ),
        ConditionVerdict::bounded("i", ci.0, ci.1, "[<H>^beta, K] <H>^beta A"),
        ConditionVerdict::bounded("k", ck.0, ck.1, "<H>^beta ad2 <H>^beta"),
    ];
    if used < ensemble.len() / 4 {
        log::warn!("only {used} of {} packets reach the cutoff plateau", ensemble.len());
    }

    Ok(AssumptionReport {
        r: spec.r,
        beta,
        c0,
        c1,
        c2,
        c2_full,
        c_tilde,
        norm_b: nb.0,
        norm_b_full: nb.1,
        norm_ad2: nad2.0,
        norm_ad3: nad3.0,
        norm_ad4: nad4.0,
        norm_ad2_full: nad2.1,
        norm_ad3_full: nad3.1,
        norm_ad4_full: nad4.1,
        norm_h_b: nhb.0,
        norm_h_b_full: nhb.1,
        delta_k,
        delta_k_full,
        j_h_commutator,
        cond_i_norm: ci.0,
        cond_i_full: ci.1,
        cond_k_norm: ck.0,
        cond_k_full: ck.1,
        packets_used: used,
        packets_total: ensemble.len(),
        verdicts,
    })
}

/// `max_k |i(<A psi_k, H psi_k> - <H psi_k, A psi_k>)|` over the eigenpairs
/// of `H`. The form vanishes for self-adjoint `A`; `A` is taken as a plain
/// matrix so non-Hermitian perturbations can serve as a negative control.
pub fn virial_check(h: &HermitianOperator, a: MatRef<'_, C64>) -> Result<f64> {
    check_dims(h.dim(), a.nrows())?;
    let u = h.eigenvectors();
    let au = a * u;
    let hu = h.matrix() * u;
    let worst = (0..u.ncols())
        .map(|k| {
            let ah = (au.col(k).adjoint() * hu.col(k)).im;
            (2.0 * ah).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Per-packet Rayleigh quotients of a Hermitian matrix; used by the symbol
/// oracle.
pub fn packet_expectations(m: MatRef<'_, C64>, ensemble: &Ensemble) -> Vec<f64> {
    let cols = ensemble.as_columns();
    let images = m * &cols;
    (0..cols.ncols())
        .map(|j| (cols.col(j).adjoint() * images.col(j)).re / cols.col(j).squared_norm_l2())
        .collect()
}
