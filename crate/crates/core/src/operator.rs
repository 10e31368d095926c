//! Dense self-adjoint operators with a cached eigendecomposition.

use std::sync::OnceLock;

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::linalg::{self, c, C64};

/// Relative hermiticity tolerance accepted by [`HermitianOperator::new`].
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl Eigen {
    fn sorted(mut values: Vec<f64>, vectors: MatRef<'_, C64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let vectors = Mat::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, order[j])]);
        values = order.iter().map(|&k| values[k]).collect();
        Self { values, vectors }
    }

    /// `U diag(f(lambda)) U^*` for a complex-valued spectral function.
    pub fn function_matrix(&self, f: impl Fn(f64) -> C64) -> Mat<C64> {
        let d: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        linalg::conjugate_diag(self.vectors.as_ref(), &d)
    }
}

/// Hermitian matrix carrier. The stored matrix is exactly Hermitian (the
/// input is symmetrized); the defect of the input is kept for reporting.
#[derive(Debug)]
pub struct HermitianOperator {
    matrix: Mat<C64>,
    hermiticity_defect: f64,
    eigen: OnceLock<Eigen>,
}

impl Clone for HermitianOperator {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            matrix: self.matrix.clone(),
            hermiticity_defect: self.hermiticity_defect,
            eigen,
        }
    }
}

fn symmetrize(m: MatRef<'_, C64>) -> (Mat<C64>, f64) {
    let defect = linalg::frobenius((m - m.adjoint()).as_ref());
    let sym = Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    (sym, defect)
}

impl HermitianOperator {
    /// Accepts a matrix that is Hermitian up to `1e-10 (1 + |M|_F)`.
    pub fn new(matrix: Mat<C64>) -> Result<Self> {
        let op = Self::symmetrized(matrix)?;
        let tolerance = HERMITICITY_TOL * (1.0 + linalg::frobenius(op.matrix.as_ref()));
        if op.hermiticity_defect > tolerance {
            return Err(Error::NotHermitian {
                defect: op.hermiticity_defect,
                tolerance,
            });
        }
        Ok(op)
    }

    /// Replaces `M` by `(M + M^*)/2` without a tolerance check.
    pub fn symmetrized(matrix: Mat<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if !linalg::is_finite(matrix.as_ref()) {
            return Err(Error::NonFiniteMatrix);
        }
        let (matrix, hermiticity_defect) = symmetrize(matrix.as_ref());
        Ok(Self {
            matrix,
            hermiticity_defect,
            eigen: OnceLock::new(),
        })
    }

    /// Builds `U diag(values) U^*` and keeps the supplied decomposition.
    pub fn from_eigen(values: Vec<f64>, vectors: Mat<C64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteMatrix);
        }
        let d: Vec<C64> = values.iter().map(|&v| c(v)).collect();
        let raw = linalg::conjugate_diag(vectors.as_ref(), &d);
        let (matrix, hermiticity_defect) = symmetrize(raw.as_ref());
        let eigen = OnceLock::new();
        let _ = eigen.set(Eigen::sorted(values, vectors.as_ref()));
        Ok(Self {
            matrix,
            hermiticity_defect,
            eigen,
        })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::from_eigen(values.to_vec(), linalg::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect
    }

    /// Computed on first use; later calls return the cached value.
    pub fn eigen(&self) -> &Eigen {
        self.eigen.get_or_init(|| {
            let evd = self
                .matrix
                .self_adjoint_eigen(Side::Lower)
                .expect("self-adjoint eigensolver failed to converge");
            let values = evd.S().column_vector().iter().map(|v| v.re).collect();
            Eigen::sorted(values, evd.U())
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen().values
    }

    pub fn eigenvectors(&self) -> MatRef<'_, C64> {
        self.eigen().vectors.as_ref()
    }

    /// Largest eigenvalue modulus, which is the operator norm.
    pub fn spectral_radius(&self) -> f64 {
        let v = self.eigenvalues();
        v[0].abs().max(v[v.len() - 1].abs())
    }

    /// `f(M)` by exact functional calculus.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let e = self.eigen();
        let mut values = Vec::with_capacity(e.values.len());
        for &l in &e.values {
            let v = f(l);
            if !v.is_finite() {
                return Err(Error::NonFiniteFunction { eigenvalue: l });
            }
            values.push(v);
        }
        Self::from_eigen(values, e.vectors.clone())
    }

    /// `<M>^{-s} = (1 + M^2)^{-s/2}`.
    pub fn bracket_weight(&self, s: f64) -> Self {
        self.apply_function(|l| (1.0 + l * l).powf(-s / 2.0))
            .expect("bracket weight is finite for finite spectra")
    }

    /// `(M - z)^{-1}` from the eigendecomposition.
    pub fn resolvent(&self, z: C64) -> Result<Mat<C64>> {
        let e = self.eigen();
        if e.values.iter().any(|&l| (c(l) - z).norm() == 0.0) {
            return Err(crate::error::invalid("z", "z lies on the spectrum"));
        }
        Ok(e.function_matrix(|l| (c(l) - z).inv()))
    }

    /// `M x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        linalg::matvec(self.matrix.as_ref(), x)
    }

    pub fn expectation(&self, x: &[C64]) -> f64 {
        linalg::dot(x, &self.apply(x)).re
    }
}

/// Multiplication by the sawtooth coordinate `x_j`.
pub fn position_operator(grid: &GridSpace) -> HermitianOperator {
    HermitianOperator::diagonal(grid.coordinates()).expect("grid coordinates are finite")
}

/// `p = -i d/dx`, diagonal in the plane-wave basis with eigenvalues `k_m`.
pub fn momentum_operator(grid: &GridSpace) -> HermitianOperator {
    fourier_function(grid, |k| k)
}

/// `f(p)` with its plane-wave eigendecomposition attached.
pub fn fourier_function(grid: &GridSpace, f: impl Fn(f64) -> f64) -> HermitianOperator {
    let values = grid.wavenumbers().iter().map(|&k| f(k)).collect();
    HermitianOperator::from_eigen(values, linalg::plane_wave_basis(grid))
        .expect("Fourier multiplier must be finite on the band")
}
