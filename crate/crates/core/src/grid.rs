//! Periodic collocation grid on `[-L/2, L/2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// An `N`-point periodic Fourier grid on a box of length `L`.
///
/// Coordinates are `x_j = -L/2 + j L/N` and the sorted wavenumbers are
/// `k_m = 2 pi m / L` for `m = -N/2, ..., N/2 - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpace {
    n: usize,
    length: f64,
    spacing: f64,
    coordinates: Vec<f64>,
    wavenumbers: Vec<f64>,
}

impl GridSpace {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "N must be a power of two and at least 8 (got {n})"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "L must be positive and finite (got {length})"
            )));
        }
        let spacing = length / n as f64;
        let coordinates = (0..n)
            .map(|j| -length / 2.0 + j as f64 * length / n as f64)
            .collect();
        let half = (n / 2) as i64;
        let wavenumbers = (-half..half)
            .map(|m| 2.0 * PI * m as f64 / length)
            .collect();
        Ok(Self {
            n,
            length,
            spacing,
            coordinates,
            wavenumbers,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coordinates
    }

    /// Wavenumbers in ascending order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Wavenumber of FFT bin `m` (bins `N/2..N` carry the negative band).
    pub fn fft_wavenumber(&self, m: usize) -> f64 {
        let n = self.n as i64;
        let m = m as i64;
        let signed = if m < n / 2 { m } else { m - n };
        2.0 * PI * signed as f64 / self.length
    }

    pub fn fft_wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.fft_wavenumber(m)).collect()
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Nyquist wavenumber `pi N / L`.
    pub fn k_max(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Half-width of the bulk region after excluding `margin * L` at each end.
    pub fn bulk_half_width(&self, margin: f64) -> f64 {
        self.length / 2.0 * (1.0 - 2.0 * margin)
    }

    /// Same physics on a box twice as long with twice as many points.
    pub fn doubled(&self) -> Result<Self> {
        Self::new(2 * self.n, 2.0 * self.length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_for_unit_spacing() {
        let g = GridSpace::new(8, 2.0 * PI).unwrap();
        let expected = [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        for (k, e) in g.wavenumbers().iter().zip(expected) {
            assert!((k - e).abs() < 1e-14);
        }
        assert_eq!(g.k_max(), 4.0);
    }

    #[test]
    fn coordinates_and_spacing() {
        let g = GridSpace::new(8, 2.0 * PI).unwrap();
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
        assert!((g.coordinates()[0] + PI).abs() < 1e-15);
        assert!((g.coordinates()[7] - 3.0 * PI / 4.0).abs() < 1e-15);
        assert!(g.coordinates().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.spacing() * g.len() as f64, g.length());
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpace::new(7, 1.0).is_err());
        assert!(GridSpace::new(4, 1.0).is_err());
        assert!(GridSpace::new(1000, 1.0).is_err());
        assert!(GridSpace::new(16, 0.0).is_err());
        assert!(GridSpace::new(16, -2.0).is_err());
    }

    #[test]
    fn fft_order_matches_sorted_band() {
        let g = GridSpace::new(16, 3.0).unwrap();
        let mut fft = g.fft_wavenumbers();
        fft.sort_by(f64::total_cmp);
        assert_eq!(fft, g.wavenumbers());
        // symmetric band: -N/2 .. N/2-1
        assert!((g.wavenumbers()[0] + g.k_max()).abs() < 1e-12);
    }
}
