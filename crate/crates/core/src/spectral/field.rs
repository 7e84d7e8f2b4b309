use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::grid::TorusGrid;
use super::transform;
use crate::error::{Error, Result};

/// Absolute tolerance on coefficient magnitudes used by invariant checks,
/// scaled by `max(1, max |coefficient|)`.
pub const INVARIANT_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Real velocity samples on the grid, `ux[i1 * n + i2]` at `(x_{i1}, y_{i2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySamples {
    pub grid: TorusGrid,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl VelocitySamples {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            ux: vec![0.0; grid.modes()],
            uy: vec![0.0; grid.modes()],
        }
    }

    /// Samples `u(x, y)` at every grid point.
    pub fn from_fn(grid: TorusGrid, mut u: impl FnMut(f64, f64) -> (f64, f64)) -> Self {
        let n = grid.n();
        let mut out = Self::zeros(grid);
        for i1 in 0..n {
            for i2 in 0..n {
                let (a, b) = u(grid.coordinate(i1), grid.coordinate(i2));
                out.ux[i1 * n + i2] = a;
                out.uy[i1 * n + i2] = b;
            }
        }
        out
    }

    /// Trapezoidal (exact for trigonometric polynomials below Nyquist)
    /// quadrature of `u . v` over the torus.
    pub fn quadrature_dot(&self, other: &Self) -> f64 {
        let cell = self.grid.area() / self.grid.modes() as f64;
        let s: f64 = self
            .ux
            .iter()
            .zip(&other.ux)
            .chain(self.uy.iter().zip(&other.uy))
            .map(|(a, b)| a * b)
            .sum();
        s * cell
    }

    pub fn max_abs(&self) -> f64 {
        self.ux
            .iter()
            .chain(&self.uy)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Inverse transform of a Hermitian pair of component spectra.
pub(crate) fn synthesize(grid: &TorusGrid, cx: &[Complex64], cy: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n();
    let mut buf: Vec<Complex64> = cx
        .iter()
        .zip(cy)
        .map(|(a, b)| a + Complex64::i() * b)
        .collect();
    transform::inverse(&mut buf, n);
    buf.iter().map(|c| (c.re, c.im)).unzip()
}

/// Forward transform of two real fields, normalized so that
/// `w(x) = sum_k w_hat(k) e^{ikx}`; output spectra are exactly Hermitian.
pub(crate) fn analyze(grid: &TorusGrid, wx: &[f64], wy: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n();
    let mut buf: Vec<Complex64> = wx.iter().zip(wy).map(|(&a, &b)| Complex64::new(a, b)).collect();
    transform::forward(&mut buf, n);
    let scale = 1.0 / grid.modes() as f64;
    let mut cx = vec![ZERO; grid.modes()];
    let mut cy = vec![ZERO; grid.modes()];
    for i1 in 0..n {
        for i2 in 0..n {
            let k = grid.flat(i1, i2);
            let w = buf[k];
            let wc = buf[grid.conjugate_flat(i1, i2)].conj();
            cx[k] = (w + wc) * (0.5 * scale);
            cy[k] = (w - wc) * Complex64::new(0.0, -0.5 * scale);
        }
    }
    (cx, cy)
}

/// Unconstrained real (Hermitian) coefficient array with the mean removed.
///
/// This is what comes out of a physical-space transform before any Leray
/// projection; it is generally not divergence-free.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSpectrum {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl RawSpectrum {
    pub fn from_physical(samples: &VelocitySamples) -> Result<Self> {
        let grid = samples.grid;
        if samples.ux.len() != grid.modes() || samples.uy.len() != grid.modes() {
            return Err(Error::Validation(format!(
                "expected {} samples per component, got {} and {}",
                grid.modes(),
                samples.ux.len(),
                samples.uy.len()
            )));
        }
        if let Some(bad) = samples.ux.iter().chain(&samples.uy).find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite velocity sample {bad}")));
        }
        let (mut cx, mut cy) = analyze(&grid, &samples.ux, &samples.uy);
        cx[0] = ZERO;
        cy[0] = ZERO;
        let mut coeffs = cx;
        coeffs.append(&mut cy);
        Ok(Self { grid, coeffs })
    }

    /// Wraps a coefficient array after checking length and Hermitian symmetry.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * grid.modes() {
            return Err(Error::Validation(format!(
                "expected {} coefficients, got {}",
                2 * grid.modes(),
                coeffs.len()
            )));
        }
        let tol = INVARIANT_TOL * max_abs(&coeffs).max(1.0);
        check_hermitian(&grid, &coeffs, tol)?;
        let mut raw = Self { grid, coeffs };
        raw.coeffs[0] = ZERO;
        raw.coeffs[grid.modes()] = ZERO;
        Ok(raw)
    }

    pub(crate) fn from_parts(grid: TorusGrid, cx: Vec<Complex64>, mut cy: Vec<Complex64>) -> Self {
        let mut coeffs = cx;
        coeffs.append(&mut cy);
        coeffs[0] = ZERO;
        coeffs[grid.modes()] = ZERO;
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn to_physical(&self) -> VelocitySamples {
        let m = self.grid.modes();
        let (ux, uy) = synthesize(&self.grid, &self.coeffs[..m], &self.coeffs[m..]);
        VelocitySamples { grid: self.grid, ux, uy }
    }

    /// `|w|` by Parseval.
    pub fn norm_h(&self) -> f64 {
        (self.grid.area() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }
}

impl TryFrom<RawSpectrum> for SpectralField {
    type Error = Error;

    fn try_from(raw: RawSpectrum) -> Result<Self> {
        SpectralField::from_coeffs(raw.grid, raw.coeffs)
    }
}

fn max_abs(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
}

fn check_hermitian(grid: &TorusGrid, coeffs: &[Complex64], tol: f64) -> Result<()> {
    let n = grid.n();
    let m = grid.modes();
    for c in 0..2 {
        let block = &coeffs[c * m..(c + 1) * m];
        for i1 in 0..n {
            for i2 in 0..n {
                let a = block[grid.flat(i1, i2)];
                let b = block[grid.conjugate_flat(i1, i2)].conj();
                if (a - b).norm() > tol {
                    return Err(Error::Invariant(format!(
                        "Hermitian symmetry broken at mode ({}, {}) component {c}: |u(k) - conj u(-k)| = {:.3e}",
                        grid.mode_of(i1),
                        grid.mode_of(i2),
                        (a - b).norm()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Divergence-free, mean-zero periodic velocity field stored by its Fourier
/// coefficients `u(x) = sum_k u_hat(k) e^{i k x}`.
///
/// Coefficients are laid out component-major (`x` block then `y` block), each
/// block row-major over `(i1, i2)`. The mean mode and Nyquist modes are pinned
/// to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; 2 * grid.modes()],
        }
    }

    /// Validated constructor: rejects arrays that are not Hermitian,
    /// divergence-free, mean-zero and free of Nyquist content.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * grid.modes() {
            return Err(Error::Validation(format!(
                "expected {} coefficients, got {}",
                2 * grid.modes(),
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs.iter().find(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Validation(format!("non-finite coefficient {bad}")));
        }
        let tol = INVARIANT_TOL * max_abs(&coeffs).max(1.0);
        check_hermitian(&grid, &coeffs, tol)?;
        let n = grid.n();
        let m = grid.modes();
        for i1 in 0..n {
            for i2 in 0..n {
                let k = grid.flat(i1, i2);
                let (ux, uy) = (coeffs[k], coeffs[m + k]);
                if grid.shell(i1, i2) == 0 || grid.is_nyquist(i1, i2) {
                    if ux.norm().max(uy.norm()) > tol {
                        return Err(Error::Invariant(format!(
                            "mode ({}, {}) must be zero (mean or Nyquist)",
                            grid.mode_of(i1),
                            grid.mode_of(i2)
                        )));
                    }
                    continue;
                }
                let (kx, ky) = grid.wavevector(i1, i2);
                let kn = (kx * kx + ky * ky).sqrt();
                let div = (ux * kx + uy * ky) / kn;
                if div.norm() > tol {
                    return Err(Error::Invariant(format!(
                        "divergence at mode ({}, {}) is {:.3e}",
                        grid.mode_of(i1),
                        grid.mode_of(i2),
                        div.norm()
                    )));
                }
            }
        }
        let mut f = Self { grid, coeffs };
        f.pin_structural_zeros();
        Ok(f)
    }

    /// Caller guarantees the invariants hold by construction.
    pub(crate) fn from_coeffs_unchecked(grid: TorusGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), 2 * grid.modes());
        let mut f = Self { grid, coeffs };
        f.pin_structural_zeros();
        f
    }

    fn pin_structural_zeros(&mut self) {
        let n = self.grid.n();
        let m = self.grid.modes();
        self.coeffs[0] = ZERO;
        self.coeffs[m] = ZERO;
        let h = n / 2;
        for i in 0..n {
            for k in [self.grid.flat(h, i), self.grid.flat(i, h)] {
                self.coeffs[k] = ZERO;
                self.coeffs[m + k] = ZERO;
            }
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Component block `c` (0 = x, 1 = y).
    pub fn component(&self, c: usize) -> &[Complex64] {
        let m = self.grid.modes();
        &self.coeffs[c * m..(c + 1) * m]
    }

    pub fn into_raw(self) -> RawSpectrum {
        RawSpectrum {
            grid: self.grid,
            coeffs: self.coeffs,
        }
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "(L={}, n={}) vs (L={}, n={})",
                self.grid.length(),
                self.grid.n(),
                other.grid.length(),
                other.grid.n()
            )));
        }
        Ok(())
    }

    /// `(f, g) = integral of f . g` over the torus.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.dot(other))
    }

    #[inline]
    pub(crate) fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.grid.area()
    }

    fn weighted_sum(&self, power: i32) -> f64 {
        let n = self.grid.n();
        let m = self.grid.modes();
        let mut s = 0.0;
        for i1 in 0..n {
            for i2 in 0..n {
                let k = self.grid.flat(i1, i2);
                let e = self.coeffs[k].norm_sqr() + self.coeffs[m + k].norm_sqr();
                if e != 0.0 {
                    s += self.grid.k2(i1, i2).powi(power) * e;
                }
            }
        }
        s * self.grid.area()
    }

    /// `|f|`.
    pub fn norm_h(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `||f|| = |grad f|`.
    pub fn norm_v(&self) -> f64 {
        self.weighted_sum(1).sqrt()
    }

    /// `|A f|`.
    pub fn norm_da(&self) -> f64 {
        self.weighted_sum(2).sqrt()
    }

    /// `|A^{-1/2} f|`, the dual norm of `V`.
    pub fn norm_v_dual(&self) -> f64 {
        self.weighted_sum(-1).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.coeffs)
    }

    fn masked(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let n = self.grid.n();
        let m = self.grid.modes();
        let mut out = self.coeffs.clone();
        for i1 in 0..n {
            for i2 in 0..n {
                if !keep(i1, i2) {
                    let k = self.grid.flat(i1, i2);
                    out[k] = ZERO;
                    out[m + k] = ZERO;
                }
            }
        }
        Self {
            grid: self.grid,
            coeffs: out,
        }
    }

    /// `P_N f`.
    pub fn project_low(&self, cutoff: &GalerkinCutoff) -> Self {
        self.masked(|i1, i2| cutoff.contains(&self.grid, i1, i2))
    }

    /// `Q_N f = f - P_N f`.
    pub fn project_high(&self, cutoff: &GalerkinCutoff) -> Self {
        self.masked(|i1, i2| !cutoff.contains(&self.grid, i1, i2))
    }

    /// Zeroes every mode outside the dealiasing band.
    pub fn truncate_to_band(&self) -> Self {
        self.masked(|i1, i2| self.grid.in_band(i1, i2))
    }

    /// True when every mode with `|k|^2 > cutoff` vanishes exactly.
    pub fn is_supported_in(&self, cutoff: &GalerkinCutoff) -> bool {
        self.support_check(|i1, i2| cutoff.contains(&self.grid, i1, i2))
    }

    pub fn is_band_limited(&self) -> bool {
        self.support_check(|i1, i2| self.grid.in_band(i1, i2))
    }

    fn support_check(&self, allowed: impl Fn(usize, usize) -> bool) -> bool {
        let n = self.grid.n();
        let m = self.grid.modes();
        for i1 in 0..n {
            for i2 in 0..n {
                let k = self.grid.flat(i1, i2);
                if (self.coeffs[k] != ZERO || self.coeffs[m + k] != ZERO) && !allowed(i1, i2) {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_physical(&self) -> VelocitySamples {
        let m = self.grid.modes();
        let (ux, uy) = synthesize(&self.grid, &self.coeffs[..m], &self.coeffs[m..]);
        VelocitySamples { grid: self.grid, ux, uy }
    }

    /// `self <- self + a * x`.
    pub(crate) fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.grid, x.grid);
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += v * a;
        }
    }

    pub(crate) fn scale_in_place(&mut self, a: f64) {
        for s in self.coeffs.iter_mut() {
            *s *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale_in_place(a);
        out
    }

    /// Applies a real per-mode multiplier `m(i1, i2)` to both components.
    pub(crate) fn map_modes(&self, mult: impl Fn(usize, usize) -> f64) -> Self {
        let n = self.grid.n();
        let m = self.grid.modes();
        let mut out = self.coeffs.clone();
        for i1 in 0..n {
            for i2 in 0..n {
                let k = self.grid.flat(i1, i2);
                if out[k] == ZERO && out[m + k] == ZERO {
                    continue;
                }
                let s = mult(i1, i2);
                out[k] *= s;
                out[m + k] *= s;
            }
        }
        Self {
            grid: self.grid,
            coeffs: out,
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    /// Panics on grid mismatch.
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch in field addition");
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    /// Panics on grid mismatch.
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch in field subtraction");
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, a: f64) -> SpectralField {
        self.scaled(a)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;

    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// Spectral Galerkin cutoff: mode `k` belongs to `P_N H` iff `0 < |k|^2 <= lambda_cut`.
///
/// Eigenvalues on the torus are `lambda_1 * m` with `m` a sum of two squares,
/// so `lambda_N` and `lambda_{N+1}` are found by scanning integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalerkinCutoff {
    lambda_cut: f64,
    lambda1: f64,
}

const MEMBERSHIP_SLACK: f64 = 1e-12;

impl GalerkinCutoff {
    pub fn new(grid: &TorusGrid, lambda_cut: f64) -> Result<Self> {
        let lambda1 = grid.lambda1();
        if lambda_cut.is_nan() || lambda_cut < lambda1 * (1.0 - MEMBERSHIP_SLACK) {
            return Err(Error::Validation(format!(
                "cutoff eigenvalue {lambda_cut} is below lambda_1 = {lambda1}"
            )));
        }
        Ok(Self { lambda_cut, lambda1 })
    }

    /// Keeps every mode (used for the full-resolution reference solution).
    pub fn unbounded(grid: &TorusGrid) -> Self {
        Self {
            lambda_cut: f64::INFINITY,
            lambda1: grid.lambda1(),
        }
    }

    pub fn lambda_cut(&self) -> f64 {
        self.lambda_cut
    }

    pub fn is_unbounded(&self) -> bool {
        self.lambda_cut.is_infinite()
    }

    #[inline]
    pub fn contains(&self, grid: &TorusGrid, i1: usize, i2: usize) -> bool {
        let s = grid.shell(i1, i2);
        s > 0 && (s as f64) * self.lambda1 <= self.lambda_cut * (1.0 + MEMBERSHIP_SLACK)
    }

    /// Largest eigenvalue `lambda_N <= lambda_cut`.
    pub fn lambda_n(&self) -> f64 {
        if self.is_unbounded() {
            return f64::INFINITY;
        }
        let top = (self.lambda_cut / self.lambda1 * (1.0 + MEMBERSHIP_SLACK)).floor() as i64;
        let m = (1..=top.max(1)).rev().find(|&m| is_sum_of_two_squares(m)).unwrap_or(1);
        m as f64 * self.lambda1
    }

    /// Smallest eigenvalue `lambda_{N+1} > lambda_cut`.
    pub fn lambda_next(&self) -> Option<f64> {
        if self.is_unbounded() {
            return None;
        }
        let start = (self.lambda_cut / self.lambda1 * (1.0 + MEMBERSHIP_SLACK)).floor() as i64 + 1;
        (start..).find(|&m| is_sum_of_two_squares(m)).map(|m| m as f64 * self.lambda1)
    }

    /// Checks that every mode of `P_N H` lies inside the dealiasing band of `grid`.
    pub fn fits_band(&self, grid: &TorusGrid) -> bool {
        let band = grid.dealias_band() as f64;
        // The smallest |j|^2 outside the band is (band + 1)^2.
        self.lambda_cut < (band + 1.0).powi(2) * self.lambda1 * (1.0 - MEMBERSHIP_SLACK)
    }
}

fn is_sum_of_two_squares(m: i64) -> bool {
    let mut a = 0i64;
    while a * a <= m {
        let r = m - a * a;
        let b = (r as f64).sqrt().round() as i64;
        if b * b == r {
            return true;
        }
        a += 1;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid {
        TorusGrid::new(2.0 * PI, 16).unwrap()
    }

    fn sine_mode(g: TorusGrid, j: i64) -> SpectralField {
        // u = (sin(k0 j y), 0) with unit physical amplitude
        let k0 = g.base_wavenumber();
        let s = VelocitySamples::from_fn(g, |_, y| ((k0 * j as f64 * y).sin(), 0.0));
        RawSpectrum::from_physical(&s).unwrap().try_into().unwrap()
    }

    #[test]
    fn unit_sine_has_energy_half_area() {
        for len in [1.0, 2.0 * PI, 3.5] {
            let g = TorusGrid::new(len, 16).unwrap();
            let f = sine_mode(g, 3);
            let e = f.inner_product(&f).unwrap();
            assert!((e - len * len / 2.0).abs() < 1e-12 * len * len);
        }
    }

    #[test]
    fn zero_field_has_zero_products() {
        let f = sine_mode(grid(), 2);
        let z = SpectralField::zeros(grid());
        assert_eq!(f.inner_product(&z).unwrap(), 0.0);
        assert!(z.to_physical().max_abs() == 0.0);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = SpectralField::zeros(grid());
        let b = SpectralField::zeros(TorusGrid::new(1.0, 16).unwrap());
        assert!(matches!(a.inner_product(&b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn single_mode_norm_scaling() {
        let f = sine_mode(grid(), 2);
        let lambda: f64 = 4.0;
        assert!((f.norm_v() - lambda.sqrt() * f.norm_h()).abs() < 1e-12);
        assert!((f.norm_da() - lambda * f.norm_h()).abs() < 1e-12);
    }

    #[test]
    fn constant_field_maps_to_zero() {
        let s = VelocitySamples::from_fn(grid(), |_, _| (3.0, -1.5));
        let raw = RawSpectrum::from_physical(&s).unwrap();
        assert!(raw.coeffs().iter().all(|c| c.norm() < 1e-15));
        let f: SpectralField = raw.try_into().unwrap();
        assert_eq!(f.norm_h(), 0.0);
    }

    #[test]
    fn rejects_non_finite_samples() {
        let mut s = VelocitySamples::zeros(grid());
        s.ux[5] = f64::NAN;
        assert!(matches!(RawSpectrum::from_physical(&s), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_divergent_field() {
        // u = (sin x, 0) has divergence cos x
        let s = VelocitySamples::from_fn(grid(), |x, _| (x.sin(), 0.0));
        let raw = RawSpectrum::from_physical(&s).unwrap();
        assert!(matches!(SpectralField::try_from(raw), Err(Error::Invariant(_))));
    }

    #[test]
    fn rejects_non_hermitian_coefficients() {
        let g = grid();
        let mut c = vec![ZERO; 2 * g.modes()];
        // x-component on the mode (0, 1) without its conjugate partner
        c[g.flat(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(SpectralField::from_coeffs(g, c), Err(Error::Invariant(_))));
    }

    #[test]
    fn rejects_mean_mode() {
        let g = grid();
        let mut c = vec![ZERO; 2 * g.modes()];
        c[0] = Complex64::new(1.0, 0.0);
        assert!(SpectralField::from_coeffs(g, c).is_err());
    }

    #[test]
    fn cutoff_eigenvalues() {
        let g = grid();
        let c = GalerkinCutoff::new(&g, 3.0).unwrap();
        assert_eq!(c.lambda_n(), 2.0);
        assert_eq!(c.lambda_next(), Some(4.0));
        let c = GalerkinCutoff::new(&g, 5.0).unwrap();
        assert_eq!(c.lambda_n(), 5.0);
        assert_eq!(c.lambda_next(), Some(8.0));
        assert!(GalerkinCutoff::new(&g, 0.5).is_err());
        // 21 and 22 are not sums of two squares
        let c = GalerkinCutoff::new(&g, 20.5).unwrap();
        assert_eq!(c.lambda_next(), Some(25.0));
    }

    #[test]
    fn cutoff_band_fit() {
        let g = grid(); // band 5
        assert!(GalerkinCutoff::new(&g, 25.0).unwrap().fits_band(&g));
        assert!(GalerkinCutoff::new(&g, 35.9).unwrap().fits_band(&g));
        assert!(!GalerkinCutoff::new(&g, 36.0).unwrap().fits_band(&g));
    }
}
