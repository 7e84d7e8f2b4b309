//! Operator self-tests and oracle comparisons run by the `check` subcommand.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::gronwall_envelope;
use crate::error::Result;
use crate::interpolants::InterpolantSpec;
use crate::operators::{apply_stokes, bilinear_b, bilinear_b_direct, kolmogorov_forcing, kolmogorov_steady_state, leray_project};
use crate::random::random_field;
use crate::schemes::{step, ObservationStream, PhysicsParams, Scheme, SchemeState, SolverSettings, SteadyTruth};
use crate::spectral::{GalerkinCutoff, RawSpectrum, SpectralField, TorusGrid, VelocitySamples};

use super::experiments::seeded_rng;
use super::report::ExperimentReport;

fn random_pair(grid: &TorusGrid, rng: &mut ChaCha8Rng) -> (SpectralField, SpectralField) {
    let d1 = rng.random_range(0.0..2.0);
    let u = random_field(grid, rng, f64::INFINITY, d1);
    let d2 = rng.random_range(0.0..2.0);
    let v = random_field(grid, rng, f64::INFINITY, d2);
    (u, v)
}

/// Largest relative gap between the pseudo-spectral and the direct bilinear
/// term over `pairs` random pairs per grid.
pub fn bilinear_oracle_gap(sizes: &[usize], pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = seeded_rng(seed, 11);
    let mut worst = 0.0f64;
    for &n in sizes {
        let grid = TorusGrid::new(2.0 * std::f64::consts::PI, n)?;
        for _ in 0..pairs {
            let (u, v) = random_pair(&grid, &mut rng);
            let fast = bilinear_b(&u, &v)?;
            let slow = bilinear_b_direct(&u, &v)?;
            let scale = slow.max_abs().max(f64::MIN_POSITIVE);
            worst = worst.max((&fast - &slow).max_abs() / scale);
        }
    }
    Ok(worst)
}

/// Largest relative `|(B(u, v), v)|` and `|(B(u, u), A u)|` over random fields.
pub fn orthogonality_gap(n: usize, trials: usize, seed: u64) -> Result<f64> {
    let grid = TorusGrid::new(2.0 * std::f64::consts::PI, n)?;
    let mut rng = seeded_rng(seed, 12);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (u, v) = random_pair(&grid, &mut rng);
        let buv = bilinear_b(&u, &v)?;
        let r1 = buv.inner_product(&v)?.abs() / (buv.norm_h() * v.norm_h());
        let buu = bilinear_b(&u, &u)?;
        let au = apply_stokes(&u);
        let r2 = buu.inner_product(&au)?.abs() / (buu.norm_h() * au.norm_h());
        worst = worst.max(r1).max(r2);
    }
    Ok(worst)
}

/// Largest `|P(P w) - P w|` and `|(P w, w - P w)|` for the Leray projector and
/// the Galerkin cutoff, relative to `|w|^2` or `|w|`.
pub fn projection_gap(n: usize, trials: usize, seed: u64) -> Result<f64> {
    let grid = TorusGrid::new(2.0 * std::f64::consts::PI, n)?;
    let mut rng = seeded_rng(seed, 13);
    let cutoff = GalerkinCutoff::new(&grid, 10.0)?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let samples = VelocitySamples::from_fn(grid, |_, _| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let raw = RawSpectrum::from_physical(&samples)?;
        let pw = leray_project(&raw);
        let ppw = leray_project(&pw.clone().into_raw());
        let size = raw.norm_h();
        worst = worst.max((&ppw - &pw).max_abs() / size);
        let w = random_field(&grid, &mut rng, f64::INFINITY, 0.5);
        let lo = w.project_low(&cutoff);
        let hi = w.project_high(&cutoff);
        worst = worst.max((&lo.project_low(&cutoff) - &lo).max_abs() / w.norm_h());
        worst = worst.max(lo.inner_product(&hi)?.abs() / w.norm_h().powi(2));
    }
    Ok(worst)
}

/// Largest per-step H change of the Kolmogorov steady state under one scheme.
pub fn kolmogorov_fixed_point_drift(scheme: Scheme, steps: usize) -> Result<f64> {
    let grid = TorusGrid::new(2.0 * std::f64::consts::PI, 16)?;
    let (nu, kappa, amp) = (0.1, 2, 0.1);
    let forcing = kolmogorov_forcing(&grid, kappa, amp)?;
    let u = kolmogorov_steady_state(&grid, kappa, amp, nu)?;
    let p = PhysicsParams::new(
        nu,
        forcing,
        5.0,
        InterpolantSpec::fourier_with_cutoff(9.0)?,
        GalerkinCutoff::unbounded(&grid),
    )?;
    let truth = SteadyTruth { field: u.clone() };
    let obs = ObservationStream::new(&truth, p.interpolant)?;
    let solver = SolverSettings::default();
    let mut state = SchemeState::new(0.05, &u, &p)?;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let (next, _) = step(scheme, &state, &p, Some(&obs), &solver)?;
        worst = worst.max((&next.v - &state.v).norm_h());
        state = next;
    }
    Ok(worst)
}

/// Draws random admissible `(a_0, gamma, b_k)`, simulates
/// `(1 + gamma) a_{k+1} = a_k + b_k - slack_k` with nonnegative slack, and
/// returns how many draws ever exceeded the envelope.
pub fn gronwall_violations(draws: usize, max_steps: usize, seed: u64) -> Result<usize> {
    let mut rng = seeded_rng(seed, 14);
    let mut violations = 0;
    for _ in 0..draws {
        let a0 = rng.random_range(0.0..10.0);
        let gamma = rng.random_range(1e-4..2.0);
        let m = rng.random_range(1..=max_steps);
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let env = gronwall_envelope(a0, gamma, &b, m)?;
        let mut a = a0;
        for (k, bk) in b.iter().enumerate() {
            let slack = rng.random_range(0.0..1.0) * (a + bk).max(0.0);
            a = (a + bk - slack) / (1.0 + gamma);
            if a > env[k + 1] + 1e-12 * env[k + 1].abs().max(1.0) {
                violations += 1;
                break;
            }
        }
    }
    Ok(violations)
}

/// Runs every self-check into a report.
pub fn run_self_checks(seed: u64) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("check", seed, "none", None);
    let gap = bilinear_oracle_gap(&[8, 12, 16], 50, seed)?;
    r.value("bilinear_oracle_gap", gap);
    r.check("bilinear_oracle", gap <= 1e-12, format!("max relative gap {gap:.3e} (tol 1e-12)"));
    let gap = orthogonality_gap(16, 50, seed)?;
    r.value("orthogonality_gap", gap);
    r.check("orthogonality", gap <= 1e-11, format!("max relative inner product {gap:.3e} (tol 1e-11)"));
    let gap = projection_gap(16, 20, seed)?;
    r.value("projection_gap", gap);
    r.check("projections", gap <= 1e-12, format!("max relative defect {gap:.3e} (tol 1e-12)"));
    for scheme in [Scheme::SemiImplicit, Scheme::FullyImplicit] {
        let drift = kolmogorov_fixed_point_drift(scheme, 20)?;
        r.value(format!("kolmogorov_drift_{scheme}"), drift);
        r.check(
            format!("kolmogorov_fixed_point_{scheme}"),
            drift <= 1e-9,
            format!("max per-step change {drift:.3e} (tol 1e-9)"),
        );
    }
    let bad = gronwall_violations(1000, 200, seed)?;
    r.check("gronwall_envelope", bad == 0, format!("{bad} of 1000 draws exceeded the envelope"));
    Ok(r)
}
