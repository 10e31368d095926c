//! Band-limited bulk wave packets and the ensemble norm.
//!
//! The sawtooth position operator jumps at the box edge, so continuum
//! identities such as `i[p, x] = 1` fail there. Norms measured on packets
//! that stay away from the edge and from the Nyquist band are the finite-volume
//! stand-in for continuum operator norms.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::linalg::{self, C64};

/// Intensity allowed in the spatial and spectral tails at the margins.
pub const TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFiniteMatrix);
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        linalg::vec_norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        linalg::dot(&self.amplitudes, &other.amplitudes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    pub x0: f64,
    pub k0: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub packets: Vec<Packet>,
    #[serde(default = "default_bulk_margin")]
    pub bulk_margin: f64,
    #[serde(default = "default_band_margin")]
    pub band_margin: f64,
}

fn default_bulk_margin() -> f64 {
    DEFAULT_BULK_MARGIN
}

fn default_band_margin() -> f64 {
    DEFAULT_BAND_MARGIN
}

pub const DEFAULT_BULK_MARGIN: f64 = 0.25;
pub const DEFAULT_BAND_MARGIN: f64 = 0.25;

impl EnsembleSpec {
    /// Three centres `{-L/8, 0, L/8}` times 25 momenta spread evenly over the
    /// usable band, all with width `L/32`.
    pub fn default_for(grid: &GridSpace) -> Self {
        let l = grid.length();
        let k_top = grid.k_max() * (1.0 - DEFAULT_BAND_MARGIN);
        let momenta: Vec<f64> = (0..25).map(|i| -k_top + 2.0 * k_top * i as f64 / 24.0).collect();
        Self::grid_of(&[-l / 8.0, 0.0, l / 8.0], &momenta, l / 32.0)
    }

    pub fn grid_of(centres: &[f64], momenta: &[f64], sigma: f64) -> Self {
        let mut packets = Vec::with_capacity(centres.len() * momenta.len());
        for &x0 in centres {
            for &k0 in momenta {
                packets.push(Packet { x0, k0, sigma });
            }
        }
        Self {
            packets,
            bulk_margin: DEFAULT_BULK_MARGIN,
            band_margin: DEFAULT_BAND_MARGIN,
        }
    }

    /// Validates every packet and samples it on the grid.
    pub fn build(&self, grid: &GridSpace) -> Result<Ensemble> {
        if self.packets.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let states = self
            .packets
            .iter()
            .map(|p| packet_with_margins(grid, *p, self.bulk_margin, self.band_margin))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble {
            packets: self.packets.clone(),
            states,
        })
    }
}

/// Validated packets sampled on a grid.
#[derive(Debug, Clone)]
pub struct Ensemble {
    packets: Vec<Packet>,
    states: Vec<StateVector>,
}

impl Ensemble {
    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Packets as the columns of an `N x n_packets` matrix.
    pub fn as_columns(&self) -> Mat<C64> {
        let n = self.states[0].len();
        Mat::from_fn(n, self.states.len(), |i, j| self.states[j].amplitudes[i])
    }

    /// `max_psi |M psi| / |psi|` over the packets.
    pub fn norm_of(&self, m: MatRef<'_, C64>) -> f64 {
        column_norms(&self.images(m), &self.as_columns())
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// `M Psi` for the packet matrix `Psi`.
    pub fn images(&self, m: MatRef<'_, C64>) -> Mat<C64> {
        m * self.as_columns()
    }
}

/// Ratios `|image_j| / |state_j|`.
pub fn column_norms(images: &Mat<C64>, states: &Mat<C64>) -> Vec<f64> {
    (0..images.ncols())
        .map(|j| images.col(j).norm_l2() / states.col(j).norm_l2())
        .collect()
}

/// Packet norm of a general matrix over a validated ensemble.
pub fn ensemble_norm(m: MatRef<'_, C64>, ensemble: &Ensemble) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if m.ncols() != ensemble.states[0].len() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.states[0].len(),
            found: m.ncols(),
        });
    }
    if !linalg::is_finite(m) {
        return Err(Error::NonFiniteMatrix);
    }
    Ok(ensemble.norm_of(m))
}

/// Normalized Gaussian packet with the default margins.
pub fn wave_packet(grid: &GridSpace, x0: f64, k0: f64, sigma: f64) -> Result<StateVector> {
    packet_with_margins(
        grid,
        Packet { x0, k0, sigma },
        DEFAULT_BULK_MARGIN,
        DEFAULT_BAND_MARGIN,
    )
}

pub fn packet_with_margins(
    grid: &GridSpace,
    p: Packet,
    bulk_margin: f64,
    band_margin: f64,
) -> Result<StateVector> {
    let reject = |reason: String| Error::PacketOutsideMargins {
        x0: p.x0,
        k0: p.k0,
        sigma: p.sigma,
        reason,
    };
    if !(p.sigma.is_finite() && p.sigma > 0.0) {
        return Err(reject("sigma must be positive".into()));
    }
    if !(0.0..0.5).contains(&bulk_margin) || !(0.0..1.0).contains(&band_margin) {
        return Err(reject(format!(
            "margins out of range (bulk {bulk_margin}, band {band_margin})"
        )));
    }
    let x_lim = grid.bulk_half_width(bulk_margin);
    let k_lim = grid.k_max() * (1.0 - band_margin);
    if p.x0.abs() > x_lim {
        return Err(reject(format!("|x0| exceeds the bulk half-width {x_lim}")));
    }
    if p.k0.abs() > k_lim {
        return Err(reject(format!("|k0| exceeds the usable band {k_lim}")));
    }
    let d = grid.length() / 2.0 - p.x0.abs();
    let spatial_tail = (-d * d / (2.0 * p.sigma * p.sigma)).exp();
    if spatial_tail > TAIL_TOL {
        return Err(reject(format!(
            "spatial tail {spatial_tail:.2e} at the box edge exceeds {TAIL_TOL:e}"
        )));
    }
    let dk = grid.k_max() - p.k0.abs();
    let spectral_tail = (-2.0 * p.sigma * p.sigma * dk * dk).exp();
    if spectral_tail > TAIL_TOL {
        return Err(reject(format!(
            "spectral tail {spectral_tail:.2e} at the Nyquist edge exceeds {TAIL_TOL:e}"
        )));
    }
    let mut amps: Vec<C64> = grid
        .coordinates()
        .iter()
        .map(|&x| {
            let envelope = (-(x - p.x0).powi(2) / (4.0 * p.sigma * p.sigma)).exp();
            C64::cis(p.k0 * x) * envelope
        })
        .collect();
    let norm = linalg::vec_norm(&amps);
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::new(amps)
}
