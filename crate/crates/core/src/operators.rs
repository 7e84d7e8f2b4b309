//! Stokes operator, Leray projection, the advection term and closed-form
//! test fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{analyze, synthesize, GalerkinCutoff, RawSpectrum, SpectralField, TorusGrid};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `A f`: multiplication by `|k|^2`.
pub fn apply_stokes(f: &SpectralField) -> SpectralField {
    let g = *f.grid();
    f.map_modes(|i1, i2| g.k2(i1, i2))
}

/// `A^{-1} f`: division by `|k|^2` (the mean mode is structurally zero).
pub fn inverse_stokes(f: &SpectralField) -> SpectralField {
    let g = *f.grid();
    f.map_modes(|i1, i2| {
        let k2 = g.k2(i1, i2);
        if k2 > 0.0 {
            1.0 / k2
        } else {
            0.0
        }
    })
}

/// Removes the gradient part of a Hermitian coefficient array. Mean and
/// Nyquist modes are dropped.
pub fn leray_project(raw: &RawSpectrum) -> SpectralField {
    let grid = *raw.grid();
    let c = raw.coeffs();
    let m = grid.modes();
    let mut cx = c[..m].to_vec();
    let mut cy = c[m..].to_vec();
    project_in_place(&grid, &mut cx, &mut cy);
    cx.append(&mut cy);
    SpectralField::from_coeffs_unchecked(grid, cx)
}

fn project_in_place(grid: &TorusGrid, cx: &mut [Complex64], cy: &mut [Complex64]) {
    let n = grid.n();
    for i1 in 0..n {
        for i2 in 0..n {
            let k = grid.flat(i1, i2);
            if grid.shell(i1, i2) == 0 || grid.is_nyquist(i1, i2) {
                cx[k] = ZERO;
                cy[k] = ZERO;
                continue;
            }
            let (kx, ky) = grid.wavevector(i1, i2);
            let k2 = kx * kx + ky * ky;
            let d = (cx[k] * kx + cy[k] * ky) / k2;
            cx[k] -= d * kx;
            cy[k] -= d * ky;
        }
    }
}

fn require_band(f: &SpectralField, what: &str) -> Result<()> {
    if f.is_band_limited() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{what} has modes outside the dealiasing band |j| <= {} on an n = {} grid",
            f.grid().dealias_band(),
            f.grid().n()
        )))
    }
}

fn require_same_grid(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(format!(
            "(L={}, n={}) vs (L={}, n={})",
            a.grid().length(),
            a.grid().n(),
            b.grid().length(),
            b.grid().n()
        )));
    }
    Ok(())
}

/// `B(u, .)` with the advecting velocity `u` held in physical space, so that
/// repeated applications (as inside a Krylov solve) cost two inverse and one
/// forward transform each.
#[derive(Debug, Clone)]
pub struct Advector {
    grid: TorusGrid,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

impl Advector {
    pub fn new(u: &SpectralField) -> Result<Self> {
        require_band(u, "advecting field")?;
        Ok(Self::new_unchecked(u))
    }

    pub(crate) fn new_unchecked(u: &SpectralField) -> Self {
        let grid = *u.grid();
        let s = u.to_physical();
        Self {
            grid,
            ux: s.ux,
            uy: s.uy,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// `B(u, v) = P_sigma((u . grad) v)`, masked to the dealiasing band.
    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        if v.grid() != &self.grid {
            return Err(Error::GridMismatch("advected field lives on a different grid".into()));
        }
        require_band(v, "advected field")?;
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &SpectralField) -> SpectralField {
        let g = &self.grid;
        let n = g.n();
        let m = g.modes();
        let (vx, vy) = (v.component(0), v.component(1));
        let mut dx = vec![ZERO; m];
        let mut dy = vec![ZERO; m];
        let mut gx = [vec![ZERO; m], vec![ZERO; m]];
        for i1 in 0..n {
            for i2 in 0..n {
                let k = g.flat(i1, i2);
                let (kx, ky) = g.wavevector(i1, i2);
                dx[k] = Complex64::new(0.0, kx) * vx[k];
                dy[k] = Complex64::new(0.0, ky) * vx[k];
                gx[0][k] = Complex64::new(0.0, kx) * vy[k];
                gx[1][k] = Complex64::new(0.0, ky) * vy[k];
            }
        }
        let (dxvx, dyvx) = synthesize(g, &dx, &dy);
        let (dxvy, dyvy) = synthesize(g, &gx[0], &gx[1]);
        let mut wx = dxvx;
        let mut wy = dxvy;
        for p in 0..m {
            wx[p] = self.ux[p] * wx[p] + self.uy[p] * dyvx[p];
            wy[p] = self.ux[p] * wy[p] + self.uy[p] * dyvy[p];
        }
        let (mut cx, mut cy) = analyze(g, &wx, &wy);
        for i1 in 0..n {
            for i2 in 0..n {
                if !g.in_band(i1, i2) {
                    let k = g.flat(i1, i2);
                    cx[k] = ZERO;
                    cy[k] = ZERO;
                }
            }
        }
        project_in_place(g, &mut cx, &mut cy);
        cx.append(&mut cy);
        SpectralField::from_coeffs_unchecked(*g, cx)
    }
}

/// Pseudo-spectral, dealiased `B(u, v) = P_sigma((u . grad) v)`.
pub fn bilinear_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    require_same_grid(u, v)?;
    Advector::new(u)?.apply(v)
}

/// Brute-force convolution `sum_{p+q=k} i (u(p) . q) v(q)`, Leray-projected and
/// restricted to the dealiasing band. Cost is quadratic in the number of modes.
pub fn bilinear_b_direct(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    require_same_grid(u, v)?;
    let g = *u.grid();
    let n = g.n();
    let m = g.modes();
    let band = g.dealias_band() as i64;
    let (ux, uy) = (u.component(0), u.component(1));
    let (vx, vy) = (v.component(0), v.component(1));
    let nonzero = |cx: &[Complex64], cy: &[Complex64]| -> Vec<(i64, i64, usize)> {
        let mut out = Vec::new();
        for i1 in 0..n {
            for i2 in 0..n {
                let k = g.flat(i1, i2);
                if cx[k] != ZERO || cy[k] != ZERO {
                    out.push((g.mode_of(i1), g.mode_of(i2), k));
                }
            }
        }
        out
    };
    let ps = nonzero(ux, uy);
    let qs = nonzero(vx, vy);
    let k0 = g.base_wavenumber();
    let mut cx = vec![ZERO; m];
    let mut cy = vec![ZERO; m];
    for &(p1, p2, pk) in &ps {
        for &(q1, q2, qk) in &qs {
            let (j1, j2) = (p1 + q1, p2 + q2);
            if j1.abs() > band || j2.abs() > band {
                continue;
            }
            let dot = ux[pk] * (k0 * q1 as f64) + uy[pk] * (k0 * q2 as f64);
            let a = Complex64::i() * dot;
            let k = g.flat(g.index_of(j1), g.index_of(j2));
            cx[k] += a * vx[qk];
            cy[k] += a * vy[qk];
        }
    }
    project_in_place(&g, &mut cx, &mut cy);
    cx.append(&mut cy);
    Ok(SpectralField::from_coeffs_unchecked(g, cx))
}

/// Approximate inertial manifold correction `(nu A)^{-1} Q_N [f - B(p, p)]`
/// for a low-mode field `p`.
pub fn phi1(p: &SpectralField, f: &SpectralField, nu: f64, cutoff: &GalerkinCutoff) -> Result<SpectralField> {
    require_same_grid(p, f)?;
    if !p.is_supported_in(cutoff) {
        return Err(Error::Precondition(format!(
            "argument has modes above the cutoff {}",
            cutoff.lambda_cut()
        )));
    }
    if !(nu > 0.0) {
        return Err(Error::Precondition(format!("viscosity must be positive, got {nu}")));
    }
    let b = bilinear_b(p, p)?;
    let high = (f - &b).project_high(cutoff);
    Ok(inverse_stokes(&high).scaled(1.0 / nu))
}

fn check_mode(grid: &TorusGrid, kappa: i64) -> Result<()> {
    if kappa == 0 {
        return Err(Error::Precondition("wavenumber 0 would carry a mean flow".into()));
    }
    if kappa.unsigned_abs() as usize > grid.dealias_band() {
        return Err(Error::Precondition(format!(
            "wavenumber {kappa} lies outside the dealiasing band {}",
            grid.dealias_band()
        )));
    }
    Ok(())
}

/// Shear forcing `(amplitude * sin(2 pi kappa y / L), 0)`.
pub fn kolmogorov_forcing(grid: &TorusGrid, kappa: i64, amplitude: f64) -> Result<SpectralField> {
    check_mode(grid, kappa)?;
    let m = grid.modes();
    let mut c = vec![ZERO; 2 * m];
    c[grid.flat(0, grid.index_of(kappa))] = Complex64::new(0.0, -0.5 * amplitude);
    c[grid.flat(0, grid.index_of(-kappa))] = Complex64::new(0.0, 0.5 * amplitude);
    Ok(SpectralField::from_coeffs_unchecked(*grid, c))
}

/// Steady solution `f / (nu |k|^2)` of the unnudged equations under
/// [`kolmogorov_forcing`]; the shear is self-advection free.
pub fn kolmogorov_steady_state(grid: &TorusGrid, kappa: i64, amplitude: f64, nu: f64) -> Result<SpectralField> {
    let f = kolmogorov_forcing(grid, kappa, amplitude)?;
    let k2 = grid.lambda1() * (kappa * kappa) as f64;
    Ok(f.scaled(1.0 / (nu * k2)))
}

/// Decaying vortex array `e^{-2 nu k^2 t} (sin kx cos ky, -cos kx sin ky)`
/// with `k = 2 pi kappa / L`, an exact unforced solution.
pub fn taylor_green(grid: &TorusGrid, kappa: i64, t: f64, nu: f64) -> Result<SpectralField> {
    check_mode(grid, kappa)?;
    let a = grid.base_wavenumber() * kappa as f64;
    let amp = (-2.0 * nu * a * a * t).exp();
    let m = grid.modes();
    let mut c = vec![ZERO; 2 * m];
    for s1 in [-1i64, 1] {
        for s2 in [-1i64, 1] {
            let k = grid.flat(grid.index_of(s1 * kappa), grid.index_of(s2 * kappa));
            c[k] = Complex64::new(0.0, -0.25 * s1 as f64 * amp);
            c[m + k] = Complex64::new(0.0, 0.25 * s2 as f64 * amp);
        }
    }
    Ok(SpectralField::from_coeffs_unchecked(*grid, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_field;
    use crate::spectral::VelocitySamples;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(2.0 * PI, n).unwrap()
    }

    fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        (a - b).norm_h() / a.norm_h().max(b.norm_h()).max(1e-300)
    }

    #[test]
    fn stokes_on_single_mode() {
        let g = grid(16);
        let f = kolmogorov_forcing(&g, 2, 1.0).unwrap();
        assert!(rel_diff(&apply_stokes(&f), &f.scaled(4.0)) < 1e-15);
        assert!(rel_diff(&inverse_stokes(&f), &f.scaled(0.25)) < 1e-15);
        assert_eq!(apply_stokes(&SpectralField::zeros(g)).norm_h(), 0.0);
    }

    #[test]
    fn stokes_is_symmetric_and_invertible() {
        let g = grid(16);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_field(&g, &mut rng, 25.0, 0.0);
        let h = random_field(&g, &mut rng, 25.0, 0.0);
        let a = apply_stokes(&f).inner_product(&h).unwrap();
        let b = f.inner_product(&apply_stokes(&h)).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        assert!(rel_diff(&inverse_stokes(&apply_stokes(&f)), &f) < 1e-14);
        assert!(inverse_stokes(&f).norm_v() <= f.norm_h() / g.lambda1().sqrt() * (1.0 + 1e-14));
    }

    #[test]
    fn leray_kills_gradients_and_keeps_solenoidal_fields() {
        let g = grid(16);
        // grad of sin(x + 2y)
        let s = VelocitySamples::from_fn(g, |x, y| ((x + 2.0 * y).cos(), 2.0 * (x + 2.0 * y).cos()));
        let raw = RawSpectrum::from_physical(&s).unwrap();
        assert!(leray_project(&raw).norm_h() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_field(&g, &mut rng, 30.0, 0.5);
        let back = leray_project(&f.clone().into_raw());
        assert!(rel_diff(&back, &f) < 1e-15);
    }

    #[test]
    fn kolmogorov_forcing_matches_physical_formula() {
        let g = TorusGrid::new(3.0, 16).unwrap();
        let f = kolmogorov_forcing(&g, 2, 1.7).unwrap();
        let s = f.to_physical();
        let k0 = g.base_wavenumber();
        for i1 in 0..16 {
            for i2 in 0..16 {
                let y = g.coordinate(i2);
                assert!((s.ux[i1 * 16 + i2] - 1.7 * (2.0 * k0 * y).sin()).abs() < 1e-13);
                assert!(s.uy[i1 * 16 + i2].abs() < 1e-15);
            }
        }
        let expected = 1.7f64.powi(2) * 9.0 / 2.0;
        assert!((f.norm_h().powi(2) - expected).abs() < 1e-12 * expected);
        assert!(kolmogorov_forcing(&g, 0, 1.0).is_err());
    }

    #[test]
    fn shear_does_not_self_advect() {
        let g = grid(16);
        let u = kolmogorov_steady_state(&g, 3, 2.0, 0.1).unwrap();
        assert!(bilinear_b(&u, &u).unwrap().norm_h() < 1e-12 * u.norm_h());
    }

    #[test]
    fn taylor_green_matches_physical_formula() {
        let g = grid(16);
        let (nu, t) = (0.05, 0.7);
        let u = taylor_green(&g, 2, t, nu).unwrap();
        let amp = (-2.0f64 * nu * 4.0 * t).exp();
        let s = u.to_physical();
        for i1 in 0..16 {
            for i2 in 0..16 {
                let (x, y) = (g.coordinate(i1), g.coordinate(i2));
                let k = i1 * 16 + i2;
                assert!((s.ux[k] - amp * (2.0 * x).sin() * (2.0 * y).cos()).abs() < 1e-13);
                assert!((s.uy[k] + amp * (2.0 * x).cos() * (2.0 * y).sin()).abs() < 1e-13);
            }
        }
        let u0 = taylor_green(&g, 2, 0.0, nu).unwrap();
        assert!((u0.norm_h().powi(2) - g.area() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_green_self_advection_is_a_gradient() {
        let g = grid(8);
        let u = taylor_green(&g, 1, 0.0, 1.0).unwrap();
        assert!(bilinear_b_direct(&u, &u).unwrap().norm_h() < 1e-14);
        assert!(bilinear_b(&u, &u).unwrap().norm_h() < 1e-14);
    }

    #[test]
    fn pseudo_spectral_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [8, 12, 16] {
            let g = grid(n);
            let lam = (g.dealias_band() as f64).powi(2) * 2.0;
            for _ in 0..5 {
                let u = random_field(&g, &mut rng, lam, 0.0);
                let v = random_field(&g, &mut rng, lam, 0.0);
                let a = bilinear_b(&u, &v).unwrap();
                let b = bilinear_b_direct(&u, &v).unwrap();
                assert!(rel_diff(&a, &b) < 1e-12, "n = {n}: {}", rel_diff(&a, &b));
            }
        }
    }

    #[test]
    fn advection_rejects_out_of_band_input() {
        let g = grid(12);
        // shear at wavenumber 4, just outside the band of 3
        let mut c = vec![ZERO; 2 * g.modes()];
        c[g.flat(0, 4)] = Complex64::new(0.0, -0.5);
        c[g.flat(0, 8)] = Complex64::new(0.0, 0.5);
        let u = SpectralField::from_coeffs(g, c).unwrap();
        assert!(matches!(bilinear_b(&u, &u), Err(Error::Precondition(_))));
    }

    #[test]
    fn phi1_vanishes_for_low_mode_shear() {
        let g = grid(16);
        let cutoff = GalerkinCutoff::new(&g, 10.0).unwrap();
        let f = kolmogorov_forcing(&g, 2, 1.0).unwrap();
        let p = kolmogorov_steady_state(&g, 1, 1.0, 0.1).unwrap();
        assert!(phi1(&p, &f, 0.1, &cutoff).unwrap().norm_h() < 1e-13);
    }

    #[test]
    fn phi1_of_zero_is_high_mode_stokes_solve() {
        let g = grid(16);
        let cutoff = GalerkinCutoff::new(&g, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_field(&g, &mut rng, 20.0, 0.0);
        let out = phi1(&SpectralField::zeros(g), &f, 0.3, &cutoff).unwrap();
        let expected = inverse_stokes(&f.project_high(&cutoff)).scaled(1.0 / 0.3);
        assert!(rel_diff(&out, &expected) < 1e-15);
        assert_eq!(out.project_low(&cutoff).norm_h(), 0.0);
        let bad = random_field(&g, &mut rng, 20.0, 0.0);
        assert!(phi1(&bad, &f, 0.3, &cutoff).is_err());
    }
}
