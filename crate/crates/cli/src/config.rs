//! Scenario configuration: strict JSON parsing plus range validation with
//! field paths.

use std::path::Path;

use mourre_core::commutator::Thresholds;
use mourre_core::ensemble::{EnsembleSpec, Packet};
use mourre_core::grid::GridSpace;
use mourre_core::lap::{SweepOptions, WeightMode};
use mourre_core::model::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest `N` accepted without `--allow-large`.
pub const MAX_DEFAULT_N: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffConfig {
    #[serde(rename = "R")]
    pub r: f64,
    pub eps_hat: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self { r: 16.0, eps_hat: 0.5 }
    }
}

/// Sweep controls; the window defaults to `[3R, 6R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda_lo: Option<f64>,
    pub lambda_hi: Option<f64>,
    pub n_lambda: usize,
    pub n_mu: usize,
    pub mu_max: f64,
    pub spacing_factor: f64,
    pub mu_min: Option<f64>,
    pub refine_jump: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let w = SweepOptions::window(1.0);
        Self {
            lambda_lo: None,
            lambda_hi: None,
            n_lambda: w.n_lambda,
            n_mu: w.n_mu,
            mu_max: w.mu_max,
            spacing_factor: w.spacing_factor,
            mu_min: None,
            refine_jump: w.refine_jump,
        }
    }
}

impl SweepConfig {
    pub fn options(&self, r: f64) -> SweepOptions {
        SweepOptions {
            lambda_lo: self.lambda_lo.unwrap_or(3.0 * r),
            lambda_hi: self.lambda_hi.unwrap_or(6.0 * r),
            n_lambda: self.n_lambda,
            n_mu: self.n_mu,
            mu_max: self.mu_max,
            spacing_factor: self.spacing_factor,
            mu_min: self.mu_min,
            refine_jump: self.refine_jump,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LapConfig {
    pub s_values: Vec<f64>,
    pub beta: f64,
    #[serde(rename = "R_tilde")]
    pub r_tilde: Option<f64>,
    pub delta: Option<f64>,
    pub weight_mode: WeightMode,
    pub sweep: SweepConfig,
    /// also run the all-energy assembly (two extra sweeps)
    pub assembly: bool,
    pub s_prime: f64,
}

impl Default for LapConfig {
    fn default() -> Self {
        Self {
            s_values: vec![1.0, 4.0],
            beta: 0.0,
            r_tilde: None,
            delta: None,
            weight_mode: WeightMode::BracketA,
            sweep: SweepConfig::default(),
            assembly: false,
            s_prime: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub s: f64,
    /// defaults to the branch point `(2 gamma - 1) / (4 gamma)`
    pub beta: Option<f64>,
    /// defaults to four bulk packets on the cutoff plateau
    pub packets: Option<Vec<Packet>>,
    /// horizons reported in the curve, as multiples of the travel time
    pub t_multiples: Vec<f64>,
    pub applied_weight: bool,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            beta: None,
            packets: None,
            t_multiples: vec![0.5, 1.0, 2.0],
            applied_weight: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizedConfig {
    pub enabled: bool,
    pub s: f64,
    /// defaults to the branch point `(2 gamma - 1) / (4 gamma)`
    pub beta: Option<f64>,
    /// defaults to `4R`
    pub lambda: Option<f64>,
    pub mu: f64,
    pub eps_grid: Vec<f64>,
    pub contractions: usize,
}

impl Default for RegularizedConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            s: 0.75,
            beta: None,
            lambda: None,
            mu: 0.5,
            eps_grid: vec![0.05, 0.2],
            contractions: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "mourre-out".into(),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub model: ModelSpec,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    #[serde(default)]
    pub lap: LapConfig,
    #[serde(default)]
    pub smoothing: SmoothingConfig,
    /// defaults to the standard bulk ensemble of the grid
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub regularized: RegularizedConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    7
}

fn bad(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        bad(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn in_open_closed(v: f64, lo: f64, hi: f64) -> bool {
    v > lo && v <= hi
}

impl ScenarioConfig {
    pub fn grid_space(&self) -> Result<GridSpace, CliError> {
        GridSpace::new(self.grid.n, self.grid.l).map_err(|e| bad("grid", e.to_string()))
    }

    pub fn r_tilde_max(&self) -> f64 {
        self.cutoff.r.powf(1.0 - self.cutoff.eps_hat)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.grid.n;
        if n < 8 || !n.is_power_of_two() {
            return Err(bad("grid.N", "N must be a power of two (at least 8)"));
        }
        if !(self.grid.l.is_finite() && self.grid.l > 0.0) {
            return Err(bad("grid.L", "L must be positive"));
        }
        let grid = self.grid_space()?;
        self.model.validate().map_err(|e| bad("model", e.to_string()))?;

        let c = &self.cutoff;
        if !(c.r.is_finite() && c.r > 0.0) {
            return Err(bad("cutoff.R", "R must be positive"));
        }
        if !(c.eps_hat > 0.0 && c.eps_hat < 1.0) {
            return Err(bad("cutoff.eps_hat", "eps_hat must lie in (0, 1)"));
        }

        let lap = &self.lap;
        if lap.s_values.is_empty() {
            return Err(bad("lap.s_values", "need at least one s"));
        }
        for (i, s) in lap.s_values.iter().enumerate() {
            if !(s.is_finite() && *s > 0.5) {
                return Err(bad(&format!("lap.s_values[{i}]"), "s must exceed 1/2"));
            }
        }
        if !(0.0..=0.5).contains(&lap.beta) {
            return Err(bad("lap.beta", "beta must lie in [0, 1/2]"));
        }
        if let WeightMode::PBeta { beta } = lap.weight_mode {
            if !(0.0..=0.5).contains(&beta) {
                return Err(bad("lap.weight_mode.beta", "beta must lie in [0, 1/2]"));
            }
        }
        if let Some(rt) = lap.r_tilde {
            let max = self.r_tilde_max();
            if !in_open_closed(rt, 0.0, max * (1.0 + 1e-12)) {
                return Err(bad(
                    "lap.R_tilde",
                    format!("R_tilde must lie in (0, R^(1 - eps_hat)] = (0, {max}]"),
                ));
            }
        }
        if let Some(d) = lap.delta {
            if !(d >= 1.0 && d.is_finite()) {
                return Err(bad("lap.delta", "delta must be at least 1"));
            }
        }
        if !in_open_closed(lap.s_prime, 0.5, 1.0) {
            return Err(bad("lap.s_prime", "s' must lie in (1/2, 1]"));
        }
        if lap.assembly && lap.s_values.iter().any(|&s| s < lap.s_prime) {
            return Err(bad("lap.s_prime", "s' must not exceed any s in s_values"));
        }
        let sw = &lap.sweep;
        if sw.n_lambda < 2 || sw.n_mu < 1 {
            return Err(bad("lap.sweep", "need n_lambda >= 2 and n_mu >= 1"));
        }
        if !(sw.mu_max > 0.0 && sw.spacing_factor > 0.0 && sw.refine_jump > 0.0) {
            return Err(bad("lap.sweep", "mu_max, spacing_factor and refine_jump must be positive"));
        }
        if let Some(mu) = sw.mu_min {
            if !(mu > 0.0) {
                return Err(bad("lap.sweep.mu_min", "mu_min must be positive"));
            }
        }
        let opts = sw.options(c.r);
        if !(opts.lambda_hi > opts.lambda_lo) {
            return Err(bad("lap.sweep", "lambda_hi must exceed lambda_lo"));
        }

        let sm = &self.smoothing;
        if !in_open_closed(sm.s, 0.5, 1.0) {
            return Err(bad("smoothing.s", "s must lie in (1/2, 1]"));
        }
        if let Some(b) = sm.beta {
            if !(0.0..=0.5).contains(&b) {
                return Err(bad("smoothing.beta", "beta must lie in [0, 1/2]"));
            }
        }
        if sm.t_multiples.is_empty() || sm.t_multiples.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(bad("smoothing.t_multiples", "need positive multiples of the travel time"));
        }
        if let Some(packets) = &sm.packets {
            let spec = EnsembleSpec {
                packets: packets.clone(),
                bulk_margin: mourre_core::ensemble::DEFAULT_BULK_MARGIN,
                band_margin: mourre_core::ensemble::DEFAULT_BAND_MARGIN,
            };
            spec.build(&grid).map_err(|e| bad("smoothing.packets", e.to_string()))?;
        }

        let rg = &self.regularized;
        if !in_open_closed(rg.s, 0.5, 1.0) {
            return Err(bad("regularized.s", "s must lie in (1/2, 1]"));
        }
        if let Some(b) = rg.beta {
            if !(0.0..=0.5).contains(&b) {
                return Err(bad("regularized.beta", "beta must lie in [0, 1/2]"));
            }
        }
        if !(rg.mu > 0.0) {
            return Err(bad("regularized.mu", "mu must be positive"));
        }
        if rg.eps_grid.is_empty()
            || rg.eps_grid.iter().any(|e| !in_open_closed(*e, 0.0, 1.0))
            || rg.eps_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(bad("regularized.eps_grid", "need ascending values in (0, 1]"));
        }
        if rg.contractions == 0 {
            return Err(bad("regularized.contractions", "need at least one contraction"));
        }

        if let Some(e) = &self.ensemble {
            e.build(&grid).map_err(|err| bad("ensemble", err.to_string()))?;
        }
        let t = &self.thresholds;
        if !(t.c0_min >= 0.0 && t.delta_ratio > 0.0 && t.c_tilde_slack >= 0.0) {
            return Err(bad("thresholds", "thresholds must be nonnegative"));
        }
        if self.outputs.formats.is_empty() {
            return Err(bad("outputs.formats", "need at least one format"));
        }
        Ok(())
    }

    /// The same physics on a box `2^level` times larger with as many more points.
    pub fn scaled(&self, level: u32) -> Self {
        let f = 2usize.pow(level);
        let mut out = self.clone();
        out.grid.n *= f;
        out.grid.l *= f as f64;
        out
    }
}
