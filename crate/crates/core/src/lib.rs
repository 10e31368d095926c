//! Finite-grid workbench for high-energy Mourre estimates.
//!
//! Operators live on an `N`-point periodic Fourier grid. Functional calculus
//! is exact (dense eigendecomposition), and continuum identities are tested on
//! band-limited wave packets away from the box edge.

pub mod commutator;
pub mod cutoff;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod lap;
pub mod linalg;
pub mod model;
pub mod norm;
pub mod operator;
pub mod random;
pub mod regularized;
pub mod smoothing;

pub use error::{Error, Result};
pub use grid::GridSpace;
pub use linalg::C64;
pub use operator::HermitianOperator;
