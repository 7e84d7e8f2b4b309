//! Multi-step drivers: scheme runs, the fine-step Galerkin reference and truth
//! generation.

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

use super::observations::ObservationStream;
use super::params::{PhysicsParams, Scheme, SchemeState, SolverSettings};
use super::stepper::{fully_implicit_step, semi_implicit_step, StepInfo};
use super::trajectory::Trajectory;

pub fn step(
    scheme: Scheme,
    state: &SchemeState,
    p: &PhysicsParams,
    obs: Option<&ObservationStream>,
    solver: &SolverSettings,
) -> Result<(SchemeState, StepInfo)> {
    match scheme {
        Scheme::SemiImplicit => semi_implicit_step(state, p, obs, solver),
        Scheme::FullyImplicit => fully_implicit_step(state, p, obs, solver),
    }
}

/// Advances `steps` times, handing every new state to `on_step`.
pub fn run_scheme<F>(
    scheme: Scheme,
    mut state: SchemeState,
    p: &PhysicsParams,
    obs: Option<&ObservationStream>,
    steps: usize,
    solver: &SolverSettings,
    mut on_step: F,
) -> Result<SchemeState>
where
    F: FnMut(&SchemeState, &StepInfo) -> Result<()>,
{
    for _ in 0..steps {
        let (next, info) = step(scheme, &state, p, obs, solver)?;
        on_step(&next, &info)?;
        state = next;
    }
    Ok(state)
}

/// Number of steps of size `tau` covering `span`, which must be a whole multiple.
pub fn whole_steps(span: f64, tau: f64, what: &str) -> Result<usize> {
    let x = span / tau;
    let k = x.round();
    if k < 0.0 || (x - k).abs() > 1e-6 * x.max(1.0) {
        return Err(Error::Config(format!("{what} = {span} is not a whole multiple of the step {tau}")));
    }
    Ok(k as usize)
}

fn integrate_recording(
    v0: &SpectralField,
    p: &PhysicsParams,
    obs: Option<&ObservationStream>,
    t_end: f64,
    tau_fine: f64,
    record_every: f64,
    solver: &SolverSettings,
) -> Result<Trajectory> {
    let steps = whole_steps(t_end, tau_fine, "t_end")?;
    let stride = whole_steps(record_every, tau_fine, "recording interval")?.max(1);
    let state = SchemeState::new(tau_fine, v0, p)?;
    let mut traj = Trajectory::new();
    traj.push(0, 0.0, state.v.clone());
    run_scheme(Scheme::SemiImplicit, state, p, obs, steps, solver, |s, _| {
        if s.k.is_multiple_of(stride) {
            traj.push(s.k, s.time(), s.v.clone());
        }
        Ok(())
    })?;
    Ok(traj)
}

/// Fine-step semi-implicit run of the nudged Galerkin system, used as a
/// stand-in for its exact time flow (first-order bias in `tau_fine`).
pub fn reference_galerkin_integrate(
    v0: &SpectralField,
    p: &PhysicsParams,
    obs: Option<&ObservationStream>,
    t_end: f64,
    tau_fine: f64,
    record_every: f64,
    solver: &SolverSettings,
) -> Result<Trajectory> {
    integrate_recording(v0, p, obs, t_end, tau_fine, record_every, solver)
}

/// Unnudged integration on the whole dealiasing band, for truth generation.
pub fn nse_integrate(
    u0: &SpectralField,
    p: &PhysicsParams,
    t_end: f64,
    tau_fine: f64,
    record_every: f64,
    solver: &SolverSettings,
) -> Result<Trajectory> {
    if p.beta != 0.0 {
        return Err(Error::Precondition("truth integration requires a zero nudging gain".into()));
    }
    if !p.cutoff.is_unbounded() {
        return Err(Error::Precondition("truth integration requires the full dealiasing band".into()));
    }
    integrate_recording(u0, p, None, t_end, tau_fine, record_every, solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolants::InterpolantSpec;
    use crate::operators::{kolmogorov_forcing, kolmogorov_steady_state, taylor_green};
    use crate::random::random_field;
    use crate::spectral::{GalerkinCutoff, TorusGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unforced(g: TorusGrid, nu: f64) -> PhysicsParams {
        PhysicsParams::new(
            nu,
            SpectralField::zeros(g),
            0.0,
            InterpolantSpec::fourier_with_cutoff(1.0).unwrap(),
            GalerkinCutoff::unbounded(&g),
        )
        .unwrap()
    }

    #[test]
    fn taylor_green_error_is_first_order() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let nu = 0.1;
        let p = unforced(g, nu);
        let u0 = taylor_green(&g, 1, 0.0, nu).unwrap();
        let solver = SolverSettings::default();
        let mut errs = Vec::new();
        for tau in [0.02, 0.01] {
            let traj = nse_integrate(&u0, &p, 1.0, tau, 0.1, &solver).unwrap();
            let e = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(&t, u)| (u - &taylor_green(&g, 1, t, nu).unwrap()).norm_h())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 1.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn discrete_energy_inequality_holds() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let nu = 0.05;
        let f = kolmogorov_forcing(&g, 1, 0.3).unwrap();
        let p = PhysicsParams { forcing: f.clone(), ..unforced(g, nu) };
        let u0 = random_field(&g, &mut ChaCha8Rng::seed_from_u64(1), f64::INFINITY, 1.0);
        let u0 = u0.scaled(0.5 / u0.norm_h());
        let tau = 0.01;
        let mut prev = SchemeState::new(tau, &u0, &p).unwrap().v;
        run_scheme(Scheme::SemiImplicit, SchemeState::new(tau, &u0, &p).unwrap(), &p, None, 100, &SolverSettings::default(), |s, _| {
            let lhs = (s.v.norm_h().powi(2) - prev.norm_h().powi(2)) / tau;
            let rhs = 2.0 * f.dot(&s.v) - 2.0 * nu * s.v.norm_v().powi(2);
            assert!(lhs <= rhs + 1e-9 * rhs.abs().max(1.0), "{lhs} > {rhs}");
            prev = s.v.clone();
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn truth_requires_unnudged_full_band() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let p = unforced(g, 0.1);
        let u0 = SpectralField::zeros(g);
        let solver = SolverSettings::default();
        assert!(nse_integrate(&u0, &p.with_beta(1.0), 1.0, 0.1, 0.1, &solver).is_err());
        let cut = GalerkinCutoff::new(&g, 10.0).unwrap();
        assert!(nse_integrate(&u0, &p.with_cutoff(cut), 1.0, 0.1, 0.1, &solver).is_err());
    }

    #[test]
    fn steady_state_is_preserved() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let nu = 0.1;
        let p = PhysicsParams {
            forcing: kolmogorov_forcing(&g, 2, 0.1).unwrap(),
            ..unforced(g, nu)
        };
        let u = kolmogorov_steady_state(&g, 2, 0.1, nu).unwrap();
        let traj = nse_integrate(&u, &p, 1.0, 0.05, 0.5, &SolverSettings::default()).unwrap();
        assert_eq!(traj.len(), 3);
        assert!((traj.last().unwrap() - &u).norm_h() < 1e-10 * u.norm_h());
    }
}
