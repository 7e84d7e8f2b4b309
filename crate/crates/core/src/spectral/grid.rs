use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Square periodic domain `(0, L) x (0, L)` sampled on an `n x n` grid.
///
/// Fourier modes are stored in FFT order: array index `i` carries the integer
/// wavenumber `i` for `i < n/2` and `i - n` otherwise, so the index range covers
/// `[-n/2, n/2)`. The physical wavevector is `(2 pi / L) * (j1, j2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    length: f64,
    n: usize,
}

impl TorusGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("domain length must be positive, got {length}")));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("grid size must be even and >= 4, got {n}")));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of complex coefficients per velocity component.
    pub fn modes(&self) -> usize {
        self.n * self.n
    }

    /// `2 pi / L`.
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// First Stokes eigenvalue `(2 pi / L)^2`.
    pub fn lambda1(&self) -> f64 {
        let k0 = self.base_wavenumber();
        k0 * k0
    }

    /// Domain area `|Omega| = L^2`.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Signed integer wavenumber stored at array index `i`.
    #[inline]
    pub fn mode_of(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Array index of the signed integer wavenumber `j` (taken modulo `n`).
    #[inline]
    pub fn index_of(&self, j: i64) -> usize {
        j.rem_euclid(self.n as i64) as usize
    }

    /// Flat index of the mode `(i1, i2)` within one component block.
    #[inline]
    pub fn flat(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n + i2
    }

    /// Flat index of the mode `-k` for the mode stored at `(i1, i2)`.
    #[inline]
    pub fn conjugate_flat(&self, i1: usize, i2: usize) -> usize {
        let n = self.n;
        ((n - i1) % n) * n + (n - i2) % n
    }

    /// Integer squared radius `j1^2 + j2^2` of the mode at `(i1, i2)`.
    #[inline]
    pub fn shell(&self, i1: usize, i2: usize) -> i64 {
        let j1 = self.mode_of(i1);
        let j2 = self.mode_of(i2);
        j1 * j1 + j2 * j2
    }

    /// `|k|^2` of the mode at `(i1, i2)`.
    #[inline]
    pub fn k2(&self, i1: usize, i2: usize) -> f64 {
        self.lambda1() * self.shell(i1, i2) as f64
    }

    /// Physical wavevector of the mode at `(i1, i2)`.
    #[inline]
    pub fn wavevector(&self, i1: usize, i2: usize) -> (f64, f64) {
        let k0 = self.base_wavenumber();
        (k0 * self.mode_of(i1) as f64, k0 * self.mode_of(i2) as f64)
    }

    /// True when either index holds the Nyquist wavenumber `-n/2`.
    #[inline]
    pub fn is_nyquist(&self, i1: usize, i2: usize) -> bool {
        i1 == self.n / 2 || i2 == self.n / 2
    }

    /// Largest `|j|_inf` for which a quadratic product is alias-free on this
    /// grid: the largest integer strictly below `n / 3`.
    pub fn dealias_band(&self) -> usize {
        (self.n - 1) / 3
    }

    #[inline]
    pub fn in_band(&self, i1: usize, i2: usize) -> bool {
        let band = self.dealias_band() as i64;
        self.mode_of(i1).abs() <= band && self.mode_of(i2).abs() <= band
    }

    /// Sorted distinct eigenvalues `|k|^2 > 0` of modes inside the dealiasing band.
    pub fn band_eigenvalues(&self) -> Vec<f64> {
        let mut shells: Vec<i64> = Vec::new();
        for i1 in 0..self.n {
            for i2 in 0..self.n {
                if self.in_band(i1, i2) {
                    let s = self.shell(i1, i2);
                    if s > 0 {
                        shells.push(s);
                    }
                }
            }
        }
        shells.sort_unstable();
        shells.dedup();
        shells.into_iter().map(|s| s as f64 * self.lambda1()).collect()
    }

    /// Physical coordinate of grid index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        self.length * i as f64 / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_grids() {
        assert!(TorusGrid::new(1.0, 3).is_err());
        assert!(TorusGrid::new(1.0, 2).is_err());
        assert!(TorusGrid::new(1.0, 7).is_err());
        assert!(TorusGrid::new(0.0, 8).is_err());
        assert!(TorusGrid::new(1.0, 8).is_ok());
    }

    #[test]
    fn first_eigenvalue() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        assert!((g.lambda1() - 1.0).abs() < 1e-15);
        let g = TorusGrid::new(1.0, 16).unwrap();
        assert!((g.lambda1() - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn index_mode_roundtrip() {
        let g = TorusGrid::new(1.0, 12).unwrap();
        for i in 0..12 {
            assert_eq!(g.index_of(g.mode_of(i)), i);
        }
        assert_eq!(g.mode_of(6), -6);
        assert_eq!(g.mode_of(11), -1);
    }

    #[test]
    fn dealias_band_is_strictly_below_a_third() {
        for (n, band) in [(8, 2), (12, 3), (16, 5), (32, 10), (64, 21)] {
            let g = TorusGrid::new(1.0, n).unwrap();
            assert_eq!(g.dealias_band(), band);
            assert!(3 * band < n);
        }
    }
}
