//! Coarse observation operators and empirical estimates of their
//! approximation constants.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::operators::leray_project;
use crate::random::random_field;
use crate::spectral::{analyze, GalerkinCutoff, RawSpectrum, SpectralField, TorusGrid, VelocitySamples};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolantKind {
    /// Keep the Fourier modes with `|k|^2 <= 1/h^2`.
    FourierTruncation,
    /// Average over a uniform partition into `h x h` cells.
    VolumeAverage,
}

impl fmt::Display for InterpolantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FourierTruncation => "fourier_truncation",
            Self::VolumeAverage => "volume_average",
        })
    }
}

impl FromStr for InterpolantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier_truncation" => Ok(Self::FourierTruncation),
            "volume_average" => Ok(Self::VolumeAverage),
            other => Err(Error::Config(format!(
                "unknown interpolant kind '{other}' (expected fourier_truncation or volume_average)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolantSpec {
    pub kind: InterpolantKind,
    pub h: f64,
}

impl InterpolantSpec {
    pub fn new(kind: InterpolantKind, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("observation resolution h must be positive, got {h}")));
        }
        Ok(Self { kind, h })
    }

    /// Fourier truncation whose cutoff is exactly `lambda_cut = 1/h^2`.
    pub fn fourier_with_cutoff(lambda_cut: f64) -> Result<Self> {
        Self::new(InterpolantKind::FourierTruncation, 1.0 / lambda_cut.sqrt())
    }

    /// Number of cells per side for a volume-average partition.
    pub fn cells_per_side(&self, grid: &TorusGrid) -> Result<usize> {
        let ratio = grid.length() / self.h;
        let cells = ratio.round();
        if cells < 1.0 || (ratio - cells).abs() > 1e-9 * ratio {
            return Err(Error::Config(format!(
                "L / h = {ratio} is not a positive integer"
            )));
        }
        let cells = cells as usize;
        if !grid.n().is_multiple_of(cells) {
            return Err(Error::Config(format!(
                "grid size {} is not divisible into {cells} cells per side",
                grid.n()
            )));
        }
        Ok(cells)
    }

    pub fn validate_for(&self, grid: &TorusGrid) -> Result<()> {
        match self.kind {
            InterpolantKind::FourierTruncation => Ok(()),
            InterpolantKind::VolumeAverage => self.cells_per_side(grid).map(|_| ()),
        }
    }

    /// `|k|^2` threshold of the Fourier truncation.
    pub fn fourier_cutoff(&self) -> f64 {
        1.0 / (self.h * self.h)
    }

    /// `P_sigma I_h f`.
    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        match self.kind {
            InterpolantKind::FourierTruncation => Ok(self.truncate(f)),
            InterpolantKind::VolumeAverage => {
                let cells = self.cells_per_side(f.grid())?;
                Ok(block_average(f, cells))
            }
        }
    }

    fn truncate(&self, f: &SpectralField) -> SpectralField {
        let g = *f.grid();
        let cut = self.fourier_cutoff() * (1.0 + 1e-12);
        f.map_modes(|i1, i2| if g.k2(i1, i2) <= cut { 1.0 } else { 0.0 })
    }

    /// Diagonal part of `P_sigma I_h` in the Fourier basis; exact for the
    /// truncation, the product of cell-average sinc factors for volume
    /// averages. Used as a preconditioner weight.
    pub fn diagonal_weight(&self, grid: &TorusGrid, i1: usize, i2: usize) -> f64 {
        match self.kind {
            InterpolantKind::FourierTruncation => {
                if grid.k2(i1, i2) <= self.fourier_cutoff() * (1.0 + 1e-12) {
                    1.0
                } else {
                    0.0
                }
            }
            InterpolantKind::VolumeAverage => {
                let (kx, ky) = grid.wavevector(i1, i2);
                sinc(0.5 * kx * self.h) * sinc(0.5 * ky * self.h)
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Replaces every sample by the mean over its cell.
fn average_cells(s: &mut VelocitySamples, cells: usize) {
    let n = s.grid.n();
    let b = n / cells;
    let inv = 1.0 / (b * b) as f64;
    for data in [&mut s.ux, &mut s.uy] {
        for c1 in 0..cells {
            for c2 in 0..cells {
                let mut sum = 0.0;
                for i1 in c1 * b..(c1 + 1) * b {
                    for i2 in c2 * b..(c2 + 1) * b {
                        sum += data[i1 * n + i2];
                    }
                }
                let mean = sum * inv;
                for i1 in c1 * b..(c1 + 1) * b {
                    for i2 in c2 * b..(c2 + 1) * b {
                        data[i1 * n + i2] = mean;
                    }
                }
            }
        }
    }
}

fn block_average(f: &SpectralField, cells: usize) -> SpectralField {
    let g = *f.grid();
    let mut s = f.to_physical();
    average_cells(&mut s, cells);
    let (cx, cy) = analyze(&g, &s.ux, &s.uy);
    leray_project(&RawSpectrum::from_parts(g, cx, cy))
}

fn random_probe<R: Rng + ?Sized>(grid: &TorusGrid, rng: &mut R, trial: usize) -> SpectralField {
    // Alternate broadband probes with probes concentrated in a random shell
    // range, which is where the worst case of a truncation-type bound sits.
    let eig = grid.band_eigenvalues();
    if trial.is_multiple_of(2) {
        let decay = rng.random_range(0.0..2.0);
        random_field(grid, rng, f64::INFINITY, decay)
    } else {
        let top = eig[rng.random_range(0..eig.len())];
        let f = random_field(grid, rng, top, 0.0);
        let lower = GalerkinCutoff::new(grid, (0.8 * top).max(grid.lambda1())).expect("cutoff above lambda_1");
        let g = f.project_high(&lower);
        if g.norm_h() > 0.0 {
            g
        } else {
            f
        }
    }
}

fn require_trials(trials: usize) -> Result<()> {
    if trials < 10 {
        return Err(Error::Precondition(format!("need at least 10 trials, got {trials}")));
    }
    Ok(())
}

/// Largest observed `|f - I_h f|^2 / (h^2 ||f||^2)` over random band-limited fields.
pub fn estimate_c0<R: Rng + ?Sized>(spec: &InterpolantSpec, grid: &TorusGrid, trials: usize, rng: &mut R) -> Result<f64> {
    require_trials(trials)?;
    spec.validate_for(grid)?;
    let mut worst = 0.0f64;
    for t in 0..trials {
        let f = random_probe(grid, rng, t);
        let v = f.norm_v();
        if v == 0.0 {
            continue;
        }
        let r = (&f - &spec.apply(&f)?).norm_h();
        worst = worst.max((r / (spec.h * v)).powi(2));
    }
    Ok(worst)
}

/// Largest observed `|A^{-1/2}(f - I_h f)| / (h |f|)` over random fields.
pub fn estimate_c_minus1<R: Rng + ?Sized>(
    spec: &InterpolantSpec,
    grid: &TorusGrid,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    require_trials(trials)?;
    spec.validate_for(grid)?;
    let mut worst = 0.0f64;
    for t in 0..trials {
        let f = random_probe(grid, rng, t);
        let h = f.norm_h();
        if h == 0.0 {
            continue;
        }
        let r = (&f - &spec.apply(&f)?).norm_v_dual();
        worst = worst.max(r / (spec.h * h));
    }
    Ok(worst)
}

/// Largest observed `|I_h q| h^2 lambda_{N+1}^{1/4} / (|Omega|^{3/4} |q|)` over
/// random high-mode fields `q = Q_N q`.
pub fn estimate_high_mode_amplification<R: Rng + ?Sized>(
    spec: &InterpolantSpec,
    grid: &TorusGrid,
    cutoff: &GalerkinCutoff,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    require_trials(trials)?;
    spec.validate_for(grid)?;
    let next = cutoff
        .lambda_next()
        .ok_or_else(|| Error::Precondition("cutoff keeps every mode".into()))?;
    let scale = spec.h * spec.h * next.powf(0.25) / grid.area().powf(0.75);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let q = random_probe(grid, rng, t).project_high(cutoff);
        let h = q.norm_h();
        if h == 0.0 {
            continue;
        }
        worst = worst.max(spec.apply(&q)?.norm_h() * scale / h);
    }
    Ok(worst)
}

/// Both sides of the two stabilizing inequalities
/// `-2 beta (P I_h phi, phi) <= nu ||phi||^2 - beta |phi|^2` and
/// `-2 beta (P I_h phi, A phi) <= nu |A phi|^2 - beta ||phi||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizingReport {
    pub lhs_h: f64,
    pub rhs_h: f64,
    pub lhs_v: f64,
    pub rhs_v: f64,
}

impl StabilizingReport {
    pub fn slack_h(&self) -> f64 {
        self.rhs_h - self.lhs_h
    }

    pub fn slack_v(&self) -> f64 {
        self.rhs_v - self.lhs_v
    }

    fn violated(lhs: f64, rhs: f64) -> bool {
        lhs > rhs + 1e-12 * lhs.abs().max(rhs.abs())
    }

    pub fn violated_h(&self) -> bool {
        Self::violated(self.lhs_h, self.rhs_h)
    }

    pub fn violated_v(&self) -> bool {
        Self::violated(self.lhs_v, self.rhs_v)
    }
}

pub fn stabilizing_inequality_check(
    spec: &InterpolantSpec,
    beta: f64,
    nu: f64,
    phi: &SpectralField,
) -> Result<StabilizingReport> {
    let ih = spec.apply(phi)?;
    let a_phi = crate::operators::apply_stokes(phi);
    Ok(StabilizingReport {
        lhs_h: -2.0 * beta * ih.dot(phi),
        rhs_h: nu * phi.norm_v().powi(2) - beta * phi.norm_h().powi(2),
        lhs_v: -2.0 * beta * ih.dot(&a_phi),
        rhs_v: nu * phi.norm_da().powi(2) - beta * phi.norm_v().powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid {
        TorusGrid::new(2.0 * PI, 32).unwrap()
    }

    #[test]
    fn truncation_is_idempotent() {
        let g = grid();
        let spec = InterpolantSpec::fourier_with_cutoff(20.0).unwrap();
        let f = random_field(&g, &mut ChaCha8Rng::seed_from_u64(1), f64::INFINITY, 0.0);
        let once = spec.apply(&f).unwrap();
        assert_eq!(spec.apply(&once).unwrap(), once);
    }

    #[test]
    fn block_constant_samples_are_fixed_by_averaging() {
        let g = grid();
        let mut s = VelocitySamples::from_fn(g, |x, y| {
            let (c1, c2) = ((x / (g.length() / 4.0)).floor(), (y / (g.length() / 4.0)).floor());
            (c1 * 3.0 - c2, c1 * c2)
        });
        let before = s.clone();
        average_cells(&mut s, 4);
        assert_eq!(s, before);
    }

    #[test]
    fn indivisible_partition_is_rejected() {
        let g = grid();
        let spec = InterpolantSpec::new(InterpolantKind::VolumeAverage, g.length() / 3.0).unwrap();
        assert!(matches!(spec.apply(&SpectralField::zeros(g)), Err(Error::Config(_))));
        let spec = InterpolantSpec::new(InterpolantKind::VolumeAverage, 1.0).unwrap();
        assert!(spec.validate_for(&g).is_err());
    }

    #[test]
    fn truncation_c0_never_exceeds_one() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for cut in [4.0, 10.0, 30.0] {
            let spec = InterpolantSpec::fourier_with_cutoff(cut).unwrap();
            let c0 = estimate_c0(&spec, &g, 60, &mut rng).unwrap();
            assert!(c0 > 0.0 && c0 <= 1.0 + 1e-10, "c0 = {c0}");
        }
        let spec = InterpolantSpec::fourier_with_cutoff(4.0).unwrap();
        assert!(estimate_c0(&spec, &g, 5, &mut rng).is_err());
    }

    #[test]
    fn volume_average_constants_are_finite() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = InterpolantSpec::new(InterpolantKind::VolumeAverage, g.length() / 8.0).unwrap();
        let c0 = estimate_c0(&spec, &g, 40, &mut rng).unwrap();
        let cm1 = estimate_c_minus1(&spec, &g, 40, &mut rng).unwrap();
        assert!(c0.is_finite() && c0 > 0.0);
        assert!(cm1.is_finite() && cm1 > 0.0);
        let cutoff = GalerkinCutoff::new(&g, 30.0).unwrap();
        let amp = estimate_high_mode_amplification(&spec, &g, &cutoff, 20, &mut rng).unwrap();
        assert!(amp.is_finite());
    }

    #[test]
    fn stabilizing_inequalities_hold_when_admissible() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (nu, beta) = (0.1, 5.0);
        // beta h^2 <= nu
        let spec = InterpolantSpec::fourier_with_cutoff(beta / nu).unwrap();
        for _ in 0..50 {
            let decay = rng.random_range(0.0..2.0);
            let phi = random_field(&g, &mut rng, f64::INFINITY, decay);
            let r = stabilizing_inequality_check(&spec, beta, nu, &phi).unwrap();
            assert!(!r.violated_h() && !r.violated_v(), "{r:?}");
        }
        let r = stabilizing_inequality_check(&spec, beta, nu, &SpectralField::zeros(g)).unwrap();
        assert_eq!((r.lhs_h, r.rhs_h, r.lhs_v, r.rhs_v), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn violating_the_resolution_condition_is_flagged() {
        let g = grid();
        let (nu, beta) = (0.1, 5.0);
        // beta h^2 = 10 nu
        let spec = InterpolantSpec::fourier_with_cutoff(beta / (10.0 * nu)).unwrap();
        let just_above = GalerkinCutoff::new(&g, spec.fourier_cutoff()).unwrap();
        let phi = random_field(&g, &mut ChaCha8Rng::seed_from_u64(6), just_above.lambda_next().unwrap(), 0.0)
            .project_high(&just_above);
        let r = stabilizing_inequality_check(&spec, beta, nu, &phi).unwrap();
        assert!(r.violated_h());
    }
}
