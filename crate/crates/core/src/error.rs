use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: defect {defect:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("function is not finite at eigenvalue {eigenvalue}")]
    NonFiniteFunction { eigenvalue: f64 },

    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("wave packet (x0={x0}, k0={k0}, sigma={sigma}) violates grid margins: {reason}")]
    PacketOutsideMargins {
        x0: f64,
        k0: f64,
        sigma: f64,
        reason: String,
    },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("no ensemble packet survives spectral filtering into the cutoff plateau; use a larger k0 range")]
    EmptyFilteredEnsemble,

    #[error("cutoff radius R={r} exceeds the spectral reach of the grid (max eigenvalue {spectral_max})")]
    CutoffOutOfReach { r: f64, spectral_max: f64 },

    #[error("mu_min={mu_min} violates the level-spacing rule (mean spacing {spacing}, need mu_min >= {required})")]
    LevelSpacing {
        mu_min: f64,
        spacing: f64,
        required: f64,
    },

    #[error("shifted energy {lambda} lies outside the usable momentum band |k| <= {band}")]
    OutOfBand { lambda: f64, band: f64 },

    #[error("no spectral weight left after cutoff projection")]
    EmptySpectralSupport,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
