//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! line per criterion and exits non-zero if any of them fails.
//!
//! Expected values come from oracles written here: closed forms evaluated
//! independently, dense inverses, direct time-domain quadrature.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use faer::Mat;
use mourre_core::commutator::{check_assumptions, commutator_i, packet_expectations, Thresholds};
use mourre_core::cutoff::CutoffSpec;
use mourre_core::ensemble::{packet_with_margins, Ensemble, EnsembleSpec, Packet, StateVector};
use mourre_core::lap::{
    c_of_s, lap_sweep, rhs_eval, sweep_with_weights, translation_covariance_check, RhsBranch, RhsParams, SweepGrid,
    SweepOptions, WeightMode, WeightedResolvent,
};
use mourre_core::linalg::{self, C64};
use mourre_core::model::{applied_weight, conjugate_operator, hamiltonian, ModelSpec, PotentialSpec};
use mourre_core::norm::operator_norm;
use mourre_core::random::{random_hermitian_with, rng};
use mourre_core::regularized::{mourre_weight, regularized_diagnostics, RegularizedParams};
use mourre_core::smoothing::{beta_star, kato_against_bound, project_to_plateau, theta_exponent, theta_scan, travel_time};
use mourre_core::{GridSpace, HermitianOperator};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = fn() -> mourre_core::Result<Outcome>;

fn default_grid() -> GridSpace {
    GridSpace::new(1024, 64.0 * PI).unwrap()
}

fn free(gamma: f64, b: f64) -> ModelSpec {
    ModelSpec::free(1.0, b, gamma)
}

fn decaying() -> ModelSpec {
    free(1.0, 0.0).with_potential(PotentialSpec::BracketDecay { amplitude: 0.5, rho: 2.0 })
}

fn default_ensemble(grid: &GridSpace) -> Ensemble {
    EnsembleSpec::default_for(grid).build(grid).unwrap()
}

// ---------------------------------------------------------------------------
// scalar oracles

/// `2 g(k) h'(k)` with `g(k) = k (1 + k^2 + b^2)^-gamma` and
/// `h(k) = a (k^2 + b^2)^gamma`, differentiated by hand.
fn symbol_oracle(a: f64, b: f64, gamma: f64, k: f64) -> f64 {
    let g = k / (1.0 + k * k + b * b).powf(gamma);
    let dh = a * gamma * (k * k + b * b).powf(gamma - 1.0) * 2.0 * k;
    2.0 * g * dh
}

fn dispersion(a: f64, b: f64, gamma: f64, k: f64) -> f64 {
    a * (k * k + b * b).powf(gamma)
}

/// `(1-s)^{1-s} (2-s)^{s-2}` through logarithms, with `0^0 = 1`.
fn c_oracle(s: f64) -> f64 {
    let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    (xlogx(1.0 - s) - xlogx(2.0 - s)).exp()
}

/// First closed-form bound, minimized over `R_tilde` in `(0, r_max]` by a
/// dense logarithmic scan.
fn weak_branch_min(s: f64, delta: f64, c0: f64, c2: f64, r_max: f64) -> (f64, f64) {
    let f = |rt: f64| {
        let lead = (delta / rt).sqrt();
        let tail = delta * rt.powf(s - 0.5) * c_oracle_prefactor(s);
        (lead + tail).powi(2) * (delta * c2 * rt / c0).exp() / c0
    };
    let n = 200_000;
    let (lo, hi) = (1e-6f64.ln(), r_max.ln());
    (0..=n)
        .map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp())
        .map(|rt| (f(rt), rt))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
}

/// `(1-s)^{1-s} (2-s) / (2s-1)`.
fn c_oracle_prefactor(s: f64) -> f64 {
    let p = if s == 1.0 { 1.0 } else { (1.0 - s).powf(1.0 - s) };
    p * (2.0 - s) / (2.0 * s - 1.0)
}

// ---------------------------------------------------------------------------
// criteria

fn symbol() -> mourre_core::Result<Outcome> {
    let grid = default_grid();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (gamma, b) in [(1.0, 0.0), (1.0, 1.0), (0.5, 0.0), (2.0, 0.0)] {
        let m = free(gamma, b);
        let h = hamiltonian(&grid, &m)?;
        let a = conjugate_operator(&grid, &m)?;
        // plateau of phi_R with R = h(4)/2 starts at k = 4
        let r = dispersion(1.0, b, gamma, 4.0) / 2.0;
        let k_lo = 4.0;
        let k_hi = 0.75 * grid.k_max();
        assert!(dispersion(1.0, b, gamma, k_lo) >= 2.0 * r - 1e-9);
        let ks: Vec<f64> = (0..8).map(|i| k_lo + (k_hi - k_lo) * i as f64 / 7.0).collect();
        let e = EnsembleSpec::grid_of(&[0.0], &ks, grid.length() / 32.0).build(&grid)?;
        let bm = commutator_i(&h, &a)?;
        for (k, v) in ks.iter().zip(packet_expectations(bm.matrix(), &e)) {
            let want = symbol_oracle(1.0, b, gamma, *k);
            let ratio = (v - want).abs() / (0.05 * want.abs().max(1.0));
            worst = worst.max(ratio);
            ok &= ratio <= 1.0;
        }
    }
    Ok(outcome(ok, format!("worst deviation {worst:.3} of the 5% allowance")))
}

fn worked_example() -> mourre_core::Result<Outcome> {
    let p = RhsParams {
        s: 4.0,
        r_tilde: 4.0,
        delta: 1.0,
        c0: 2.0,
        c2: 0.0,
        eps_hat: 0.5,
        r: 16.0,
    };
    let v = rhs_eval(&p, RhsBranch::Strong)?;
    // C(4) = 27/256, so the bound is (1/2 + 108/256)^2 / 2 = 236^2 / (2 * 256^2)
    let exact = (236u64 * 236) as f64 / (2 * 256 * 256) as f64;
    assert_eq!(exact, 0.4249267578125);
    let ok = (v - exact).abs() <= 1e-12 && v < 1.0;
    Ok(outcome(ok, format!("value {v} against {exact}")))
}

fn constant_identities() -> mourre_core::Result<Outcome> {
    let n = 1000;
    let lo = 0.5 + 1e-3;
    let mut c_max: f64 = 0.0;
    let mut ratio_min = f64::INFINITY;
    let mut first_bad = None;
    let mut lib_diff: f64 = 0.0;
    for i in 0..n {
        let s = lo + (1.0 - lo) * (i + 1) as f64 / n as f64;
        let c = c_oracle(s);
        lib_diff = lib_diff.max((c - c_of_s(s)).abs());
        c_max = c_max.max(c);
        let ratio = (2.0 - s) * c / (2.0 * s - 1.0);
        if ratio < 1.0 && first_bad.is_none() {
            first_bad = Some(s);
        }
        ratio_min = ratio_min.min(ratio);
    }
    let grid = GridSpace::new(256, 16.0 * PI)?;
    let m = free(1.0, 0.0);
    let a = conjugate_operator(&grid, &m)?;
    let mut weights_ok = true;
    for s in [0.6, 0.75, 1.0] {
        for eps in [0.1, 0.01] {
            let rep = mourre_weight(&a, s, eps)?.report;
            // bounds rebuilt from the oracle constant
            let aw_bound = eps.powf(s - 1.0);
            let wp_bound = (1.0 - s) * c_oracle(s) * eps.powf(s - 1.0);
            weights_ok &= (rep.aw_bound - aw_bound).abs() <= 1e-12 * aw_bound;
            weights_ok &= rep.aw_norm <= aw_bound * (1.0 + 1e-8);
            weights_ok &= rep.w_prime_norm <= wp_bound * (1.0 + 1e-8) + 1e-300;
        }
    }
    let ok = c_max <= 1.0 && ratio_min >= 1.0 && weights_ok && lib_diff <= 1e-14;
    Ok(outcome(
        ok,
        format!(
            "max c(s) {c_max:.6}, min (2-s)c(s)/(2s-1) {ratio_min:.6} (below 1 from s = {}), weight bounds {}",
            first_bad.map_or("none".into(), |s| format!("{s:.4}")),
            if weights_ok { "hold" } else { "violated" }
        ),
    ))
}

struct LapMeasurement {
    sup: f64,
    rhs: f64,
    mu_min: f64,
    /// sup with the damping pinned to a caller-chosen value, when requested
    sup_at: Option<f64>,
}

fn lap_measure(n: usize, l: f64, m: &ModelSpec, pinned_mu: Option<f64>) -> mourre_core::Result<LapMeasurement> {
    let grid = GridSpace::new(n, l)?;
    let r = 16.0;
    let s = 1.0;
    let h = hamiltonian(&grid, m)?;
    let a = conjugate_operator(&grid, m)?;
    let rep = check_assumptions(
        &h,
        &a,
        m,
        &CutoffSpec::mourre(r),
        0.0,
        &default_ensemble(&grid),
        &Thresholds::default(),
    )?;
    let sg = SweepGrid::build(&h, &SweepOptions::window(r))?;
    let (lo, hi) = (sg.lambda_values[0], *sg.lambda_values.last().unwrap());
    assert!((lo - 3.0 * r).abs() < 1e-9 && (hi - 6.0 * r).abs() < 1e-9, "window [{lo}, {hi}]");
    assert!(sg.mu_values.iter().all(|&mu| mu >= sg.mu_min && mu <= 1.0_f64.max(sg.mu_min)));
    let res = lap_sweep(&h, &a, s, &sg, WeightMode::BracketA)?;
    let sup_at = match pinned_mu {
        Some(mu) => {
            let opts = SweepOptions {
                mu_min: Some(mu),
                mu_max: mu,
                n_mu: 1,
                ..SweepOptions::window(r)
            };
            let pinned = SweepGrid::build(&h, &opts)?;
            Some(lap_sweep(&h, &a, s, &pinned, WeightMode::BracketA)?.sup_measured)
        }
        None => None,
    };
    let delta = 1.0 / (1.0 - r.powf(-0.5));
    let (rhs, _) = weak_branch_min(s, delta, rep.c0, rep.c2, r.sqrt());
    Ok(LapMeasurement {
        sup: res.sup_measured,
        rhs,
        mu_min: sg.mu_min,
        sup_at,
    })
}

fn lap_models() -> [(&'static str, ModelSpec); 2] {
    [("V = 0", free(1.0, 0.0)), ("V = 0.5<x>^-2", decaying())]
}

/// Default-grid measurements, shared by the bound and stability criteria.
fn base_measurements() -> mourre_core::Result<&'static [LapMeasurement]> {
    static BASE: OnceLock<Vec<LapMeasurement>> = OnceLock::new();
    if let Some(b) = BASE.get() {
        return Ok(b);
    }
    let v = lap_models()
        .iter()
        .map(|(_, m)| lap_measure(1024, 64.0 * PI, m, None))
        .collect::<mourre_core::Result<Vec<_>>>()?;
    Ok(BASE.get_or_init(|| v))
}

fn lap_bound() -> mourre_core::Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for ((name, _), base) in lap_models().iter().zip(base_measurements()?) {
        ok &= base.sup <= base.rhs;
        parts.push(format!("{name}: sup {:.4} <= {:.4}", base.sup, base.rhs));
    }
    Ok(outcome(ok, parts.join("; ")))
}

fn lap_stability() -> mourre_core::Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for ((name, m), base) in lap_models().iter().zip(base_measurements()?) {
        let fine = lap_measure(2048, 128.0 * PI, m, Some(base.mu_min))?;
        let change = ((fine.sup - base.sup) / base.sup).abs();
        ok &= change <= 0.10;
        // reported only: the same comparison with mu held at the coarse mu_min
        let pinned = fine.sup_at.map_or(f64::NAN, |v| ((v - base.sup) / base.sup).abs());
        parts.push(format!(
            "{name}: {:.4} -> {:.4} (mu_min {:.3} -> {:.3}), change {:.1}%, {:.2}% at equal mu",
            base.sup,
            fine.sup,
            base.mu_min,
            fine.mu_min,
            100.0 * change,
            100.0 * pinned
        ));
    }
    Ok(outcome(ok, parts.join("; ")))
}

fn exact_inequalities() -> mourre_core::Result<Outcome> {
    let grid = GridSpace::new(512, 32.0 * PI)?;
    let m = free(1.0, 0.0);
    let h = hamiltonian(&grid, &m)?;
    let a = conjugate_operator(&grid, &m)?;
    let ens = default_ensemble(&grid);
    let constants = |r: f64| {
        check_assumptions(&h, &a, &m, &CutoffSpec::mourre(r), 0.0, &ens, &Thresholds::default())
    };
    let params = |r: f64, lambda: f64, mu: f64, c0: f64, c2: f64| RegularizedParams {
        s: 0.75,
        lambda,
        mu,
        beta: beta_star(m.gamma),
        c0,
        c2,
        delta: 1.0 / (1.0 - r.powf(-0.5)),
        contractions: 8,
        seed: 2024,
    };

    let r = 16.0;
    let rep = constants(r)?;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut triples = 0;
    for (lambda, mu) in [(4.0 * r, 0.5), (5.0 * r, 0.2), (3.5 * r, 1.0)] {
        let trace = regularized_diagnostics(
            &h,
            &a,
            &CutoffSpec::mourre(r),
            &[0.05, 0.2],
            &params(r, lambda, mu, rep.c0, rep.c2),
        )?;
        for row in &trace.rows {
            worst = worst.max(row.b2_excess).max(row.c2_excess);
            triples += 1;
        }
    }
    let mut b4 = Vec::new();
    for r in [16.0, 32.0, 64.0] {
        let rep = constants(r)?;
        let trace = regularized_diagnostics(
            &h,
            &a,
            &CutoffSpec::mourre(r),
            &[0.05, 0.2],
            &params(r, 3.0 * r, 0.5, rep.c0.max(1e-3), rep.c2),
        )?;
        b4.push(trace.worst_b4());
    }
    let ok = triples == 6 && worst <= 1e-8 && b4.iter().all(|&x| x <= 5.0);
    Ok(outcome(
        ok,
        format!(
            "largest relative excess {worst:.3e} over {triples} triples, (phi - 1)G products {:.3} / {:.3} / {:.3}",
            b4[0], b4[1], b4[2]
        ),
    ))
}

fn virial() -> mourre_core::Result<Outcome> {
    let grid = default_grid();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let models = [free(1.0, 0.0), free(1.0, 1.0), free(0.5, 0.0), free(2.0, 0.0), decaying()];
    for m in &models {
        let h = hamiltonian(&grid, m)?;
        let a = conjugate_operator(&grid, m)?;
        // i(HA - AH) straight from the matrices
        let hm = h.matrix();
        let am = a.matrix();
        let comm = (hm * am - am * hm) * faer::Scale(linalg::I);
        let b_norm = operator_norm(comm.as_ref())?;
        let u = h.eigenvectors();
        let bu = &comm * u;
        let mut largest: f64 = 0.0;
        for k in 0..u.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..u.nrows() {
                acc += u[(i, k)].conj() * bu[(i, k)];
            }
            largest = largest.max(acc.norm());
        }
        let bound = 1e-9 * b_norm * h.spectral_radius().max(1.0);
        worst = worst.max(largest / bound);
        ok &= largest <= bound;
    }
    Ok(outcome(ok, format!("worst expectation {worst:.3e} of the allowance on {} models", models.len())))
}

/// Composite five-point Gauss-Legendre rule on `[-t, t]` applied to
/// `|W exp(-i tau H) psi|^2`, evolved in the eigenbasis.
fn time_domain_integral(h: &HermitianOperator, w: &Mat<C64>, psi: &StateVector, t: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let u = h.eigenvectors();
    let coeffs = linalg::matvec_adjoint(u, psi.amplitudes());
    let support: Vec<usize> = (0..coeffs.len()).filter(|&k| coeffs[k].norm() > 0.0).collect();
    let wu = w * u;
    let cols = Mat::from_fn(wu.nrows(), support.len(), |i, j| wu[(i, support[j])] * coeffs[support[j]]);
    let values: Vec<f64> = support.iter().map(|&k| h.eigenvalues()[k]).collect();
    let integrand = |tau: f64| {
        let phases: Vec<C64> = values.iter().map(|&l| C64::cis(-tau * l)).collect();
        linalg::matvec(cols.as_ref(), &phases).iter().map(|x| x.norm_sqr()).sum::<f64>()
    };
    let width = 2.0 * t / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = -t + (p as f64 + 0.5) * width;
        for (x, wt) in NODES.iter().zip(WEIGHTS) {
            total += wt * integrand(mid + 0.5 * width * x);
        }
    }
    total * 0.5 * width
}

fn kato() -> mourre_core::Result<Outcome> {
    let grid = default_grid();
    let m = free(1.0, 0.0);
    let r = 16.0;
    let s = 1.0;
    let h = hamiltonian(&grid, &m)?;
    let a = conjugate_operator(&grid, &m)?;
    let tilde = CutoffSpec::tilde(r);
    let t_star = travel_time(&grid, &m, &tilde)?;
    // packets with energy between 5R and the band margin
    let k_lo = (5.0 * r).sqrt();
    let k_hi = 0.75 * grid.k_max();
    let l = grid.length();
    let sigma = l / 32.0;
    let at = |f: f64| k_lo + (k_hi - k_lo) * f;
    let packets = [(0.0, at(0.25)), (0.0, at(1.0)), (-l / 8.0, at(0.625)), (l / 8.0, at(0.625))];
    let sweep = SweepGrid::build(
        &h,
        &SweepOptions {
            lambda_lo: 4.0 * r,
            lambda_hi: 9.0 * r,
            ..SweepOptions::window(r)
        },
    )?;
    let phi_t = h.apply_function(tilde.function())?;
    let weights = [
        ("<A>^-s", a.bracket_weight(s).into_matrix()),
        ("<x>^-s<p>^(1/2)", applied_weight(&grid, s, m.gamma - 0.5)),
    ];
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, w) in &weights {
        let left = w * phi_t.matrix();
        let right = phi_t.matrix() * w.adjoint();
        let bound = sweep_with_weights(&h, left.as_ref(), right.as_ref(), &sweep)?.sup_measured;
        for &(x0, k0) in &packets {
            let psi = packet_with_margins(&grid, Packet { x0, k0, sigma }, 0.25, 0.25)?;
            let (proj, ratio) = project_to_plateau(&h, &tilde, &psi)?;
            let cmp = kato_against_bound(&h, w.as_ref(), &tilde, &proj, ratio, bound, t_star)?;
            let direct = time_domain_integral(&h, w, &proj, t_star, 800);
            let oracle_err = ((direct - cmp.result.i_t) / direct).abs();
            let normalized = direct / (2.0 * PI * proj.norm().powi(2));
            ok &= cmp.pass && normalized <= 1.2 * bound;
            ok &= cmp.result.quadrature_rel_err <= 1e-6 && oracle_err <= 1e-6;
            worst_ratio = worst_ratio.max(normalized / bound);
            worst_quad = worst_quad.max(cmp.result.quadrature_rel_err);
            worst_oracle = worst_oracle.max(oracle_err);
        }
        parts.push(format!("{name} sup {bound:.4}"));
    }
    Ok(outcome(
        ok,
        format!(
            "{}; worst normalized/sup {worst_ratio:.3} (limit 1.2), closed form vs trapezoid {worst_quad:.1e}, vs time domain {worst_oracle:.1e}",
            parts.join(", ")
        ),
    ))
}

fn counterexample() -> mourre_core::Result<Outcome> {
    let grid = default_grid();
    let (s, mu) = (1.0, 0.1);
    // dense route: <x>^-1 F* diag(1/(k - z)) F <x>^-1, no eigendecomposition
    let w: Vec<f64> = grid.coordinates().iter().map(|&x| (1.0 + x * x).powf(-s / 2.0)).collect();
    let wm = linalg::diagonal(&w);
    let dense = |lambda: f64| {
        let z = C64::new(lambda, mu);
        let r = linalg::fourier_multiplier_complex(&grid, |k| C64::new(1.0, 0.0) / (C64::new(k, 0.0) - z));
        operator_norm((&wm * r * &wm).as_ref())
    };
    let reference = dense(0.0)?;
    let mut worst: f64 = 0.0;
    for m in [1i64, 4, 8] {
        let (n0, n1) = translation_covariance_check(&grid, s, 0.0, m, mu)?;
        let oracle = dense(grid.dk() * m as f64)?;
        worst = worst
            .max(((n1 - n0) / n0).abs())
            .max(((n1 - oracle) / oracle).abs())
            .max(((n0 - reference) / reference).abs());
    }
    Ok(outcome(worst <= 1e-10, format!("largest relative difference {worst:.2e}")))
}

fn theta() -> mourre_core::Result<Outcome> {
    let mut worst: f64 = 0.0;
    for gamma in [0.5, 1.0, 2.0] {
        let bs = (2.0 * gamma - 1.0) / (4.0 * gamma);
        for s in [0.75, 1.0] {
            let (arg, top) = theta_scan(gamma, s, 2001)?;
            worst = worst.max((top - (gamma - 0.5)).abs()).max((arg - bs).abs());
            worst = worst.max((theta_exponent(bs, gamma, s)? - (gamma - 0.5)).abs());
            // no grid point beats the claimed maximum
            for i in 0..=10_000 {
                let beta = 0.5 * i as f64 / 10_000.0;
                let th = if beta >= bs {
                    2.0 * beta * gamma * (1.0 - 2.0 * s) + s * (2.0 * gamma - 1.0)
                } else {
                    2.0 * beta * gamma
                };
                worst = worst.max(th - (gamma - 0.5)).max((th - theta_exponent(beta, gamma, s)?).abs());
            }
        }
    }
    Ok(outcome(worst <= 1e-10, format!("largest deviation {worst:.2e}")))
}

fn oracle_equivalence() -> mourre_core::Result<Outcome> {
    let mut r = rng(99);
    let n = 64;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let hm = random_hermitian_with(&mut r, n);
        let h = HermitianOperator::new(hm.clone())?;
        let wl = linalg::diagonal(&(0..n).map(|_| r.random_range(0.05..1.0)).collect::<Vec<_>>());
        let wr = linalg::diagonal(&(0..n).map(|_| r.random_range(0.05..1.0)).collect::<Vec<_>>());
        let z = C64::new(r.random_range(-4.0..4.0), r.random_range(1e-3..1.0));
        let fast = WeightedResolvent::new(&h, wl.as_ref(), wr.as_ref())?.norm(z);
        let mut shifted = hm;
        for i in 0..n {
            shifted[(i, i)] -= z;
        }
        let dense = &wl * linalg::inverse(shifted.as_ref())? * &wr;
        let oracle = operator_norm(dense.as_ref())?;
        worst = worst.max(((fast - oracle) / oracle).abs());
    }
    Ok(outcome(worst <= 1e-10, format!("largest relative difference {worst:.2e} on 20 instances")))
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, Criterion); 11] = [
        ("1", "symbol oracle", symbol),
        ("2", "worked bound arithmetic", worked_example),
        ("3", "constant identities", constant_identities),
        ("4a", "LAP sweep below the closed-form bound", lap_bound),
        ("4b", "LAP sup stable under (N, L) doubling", lap_stability),
        ("5", "exact operator inequalities", exact_inequalities),
        ("6", "virial identity", virial),
        ("7", "Kato integral against the LAP sup", kato),
        ("8", "translation counterexample", counterexample),
        ("9", "theta exponent maximum", theta),
        ("10", "eigenbasis vs dense inverse", oracle_equivalence),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!(
            "[{}] criterion {id:>3} {name}: {detail} ({secs:.1}s)",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
