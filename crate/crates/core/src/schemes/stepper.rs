//! One step of the nudged Galerkin system by implicit Euler variants.

use crate::error::{Error, Result};
use crate::interpolants::InterpolantKind;
use crate::operators::Advector;
use crate::spectral::SpectralField;

use super::krylov::gmres;
use super::observations::ObservationStream;
use super::params::{PhysicsParams, SchemeState, SolverSettings};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepInfo {
    /// Krylov iterations summed over all linear solves of the step.
    pub linear_iterations: usize,
    /// Outer iterations (1 for the semi-implicit scheme).
    pub picard_iterations: usize,
    /// Final relative residual of the step equation in `norm_H`.
    pub residual: f64,
    /// Relative nonlinear residual after each outer iteration.
    pub picard_trace: Vec<f64>,
}

/// The linear map `w -> w/tau + nu A w + P_N B(a, w) + beta P_N P_sigma I_h w`
/// for a frozen advecting field `a`.
struct StepOperator<'a> {
    p: &'a PhysicsParams,
    tau: f64,
    adv: Advector,
    diag: Vec<f64>,
}

impl<'a> StepOperator<'a> {
    fn new(p: &'a PhysicsParams, tau: f64, advecting: &SpectralField) -> Self {
        let g = p.grid;
        let n = g.n();
        let mut diag = vec![0.0; g.modes()];
        for i1 in 0..n {
            for i2 in 0..n {
                diag[g.flat(i1, i2)] =
                    1.0 / tau + p.nu * g.k2(i1, i2) + p.beta * p.interpolant.diagonal_weight(&g, i1, i2);
            }
        }
        Self {
            p,
            tau,
            adv: Advector::new_unchecked(advecting),
            diag,
        }
    }

    fn refreeze(&mut self, advecting: &SpectralField) {
        self.adv = Advector::new_unchecked(advecting);
    }

    fn apply(&self, w: &SpectralField) -> SpectralField {
        let p = self.p;
        let g = p.grid;
        let (tau, nu) = (self.tau, p.nu);
        let mut out = w.map_modes(|i1, i2| 1.0 / tau + nu * g.k2(i1, i2));
        let mut coupled = self.adv.apply_unchecked(w);
        if p.beta > 0.0 {
            match p.interpolant.kind {
                InterpolantKind::FourierTruncation => {
                    let cut = p.interpolant.fourier_cutoff() * (1.0 + 1e-12);
                    let obs = w.map_modes(|i1, i2| if g.k2(i1, i2) <= cut { p.beta } else { 0.0 });
                    coupled.axpy(1.0, &obs);
                }
                InterpolantKind::VolumeAverage => {
                    let obs = p.interpolant.apply(w).expect("interpolant validated with the parameters");
                    coupled.axpy(p.beta, &obs);
                }
            }
        }
        out.axpy(1.0, &p.project(&coupled));
        out
    }

    fn precondition(&self, r: &SpectralField) -> SpectralField {
        let g = self.p.grid;
        r.map_modes(|i1, i2| 1.0 / self.diag[g.flat(i1, i2)])
    }
}

fn check_state(state: &SchemeState, p: &PhysicsParams) -> Result<()> {
    if state.v.grid() != &p.grid {
        return Err(Error::GridMismatch("iterate lives on a different grid".into()));
    }
    if !p.is_in_galerkin_space(&state.v) {
        return Err(Error::Precondition("iterate has modes outside the Galerkin space".into()));
    }
    if !(state.tau.is_finite() && state.tau > 0.0) {
        return Err(Error::Precondition(format!("time step must be positive, got {}", state.tau)));
    }
    Ok(())
}

/// `v^k / tau + P_N f + beta P_N P_sigma I_h u(t_{k+1})`.
fn step_rhs(state: &SchemeState, p: &PhysicsParams, obs: Option<&ObservationStream>) -> Result<SpectralField> {
    let mut rhs = state.v.scaled(1.0 / state.tau);
    rhs.axpy(1.0, &p.project(&p.forcing));
    if p.beta > 0.0 {
        let obs = obs.ok_or_else(|| Error::Precondition("nudging gain is positive but no observations were given".into()))?;
        let t_next = (state.k + 1) as f64 * state.tau;
        let target = obs.observe(t_next)?;
        rhs.axpy(p.beta, &p.project(&target));
    }
    Ok(rhs)
}

/// Semi-implicit step: the advecting field is the old iterate, so a single
/// coercive linear solve gives `v^{k+1}`.
pub fn semi_implicit_step(
    state: &SchemeState,
    p: &PhysicsParams,
    obs: Option<&ObservationStream>,
    solver: &SolverSettings,
) -> Result<(SchemeState, StepInfo)> {
    check_state(state, p)?;
    let rhs = step_rhs(state, p, obs)?;
    let op = StepOperator::new(p, state.tau, &state.v);
    let (v, info) = gmres(
        |w: &SpectralField| op.apply(w),
        |r: &SpectralField| op.precondition(r),
        &rhs,
        Some(&state.v),
        &solver.linear,
    )?;
    Ok((
        SchemeState {
            k: state.k + 1,
            tau: state.tau,
            v: p.project(&v),
        },
        StepInfo {
            linear_iterations: info.iterations,
            picard_iterations: 1,
            residual: info.residual,
            picard_trace: Vec::new(),
        },
    ))
}

/// Fully implicit step, solved by Picard iteration on the advecting field.
/// Each outer iteration is a semi-implicit-type linear solve.
pub fn fully_implicit_step(
    state: &SchemeState,
    p: &PhysicsParams,
    obs: Option<&ObservationStream>,
    solver: &SolverSettings,
) -> Result<(SchemeState, StepInfo)> {
    check_state(state, p)?;
    let rhs = step_rhs(state, p, obs)?;
    let rhs_norm = rhs.norm_h();
    let mut info = StepInfo::default();
    let mut w = state.v.clone();
    let mut op = StepOperator::new(p, state.tau, &w);
    if rhs_norm == 0.0 {
        return Ok((
            SchemeState {
                k: state.k + 1,
                tau: state.tau,
                v: SpectralField::zeros(p.grid),
            },
            info,
        ));
    }
    for it in 1..=solver.max_picard {
        let (next, lin) = gmres(
            |x: &SpectralField| op.apply(x),
            |r: &SpectralField| op.precondition(r),
            &rhs,
            Some(&w),
            &solver.linear,
        )?;
        let next = p.project(&next);
        info.linear_iterations += lin.iterations;
        op.refreeze(&next);
        let residual = (&op.apply(&next) - &rhs).norm_h() / rhs_norm;
        let scale = next.norm_v();
        let step = (&next - &w).norm_v();
        let increment = if scale > 0.0 { step / scale } else { step };
        info.picard_trace.push(residual);
        w = next;
        if residual <= solver.picard_tol && increment <= solver.picard_tol {
            info.picard_iterations = it;
            info.residual = residual;
            return Ok((
                SchemeState {
                    k: state.k + 1,
                    tau: state.tau,
                    v: w,
                },
                info,
            ));
        }
    }
    Err(Error::Picard {
        iterations: solver.max_picard,
        residual: *info.picard_trace.last().unwrap_or(&f64::NAN),
        trace: info.picard_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolants::InterpolantSpec;
    use crate::operators::{kolmogorov_forcing, kolmogorov_steady_state, taylor_green};
    use crate::random::random_field;
    use crate::schemes::observations::SteadyTruth;
    use crate::spectral::{GalerkinCutoff, TorusGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn setup(beta: f64) -> (TorusGrid, PhysicsParams) {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let f = kolmogorov_forcing(&g, 2, 0.2).unwrap();
        let p = PhysicsParams::new(
            0.1,
            f,
            beta,
            InterpolantSpec::fourier_with_cutoff(10.0).unwrap(),
            GalerkinCutoff::new(&g, 20.0).unwrap(),
        )
        .unwrap();
        (g, p)
    }

    #[test]
    fn steady_state_is_a_fixed_point_of_both_steps() {
        let (g, p) = setup(0.0);
        let u = kolmogorov_steady_state(&g, 2, 0.2, 0.1).unwrap();
        let s = SchemeState::new(0.05, &u, &p).unwrap();
        let solver = SolverSettings::default();
        let (a, _) = semi_implicit_step(&s, &p, None, &solver).unwrap();
        let (b, _) = fully_implicit_step(&s, &p, None, &solver).unwrap();
        assert!((&a.v - &u).norm_h() < 1e-10 * u.norm_h());
        assert!((&b.v - &u).norm_h() < 1e-10 * u.norm_h());
        assert_eq!(a.k, 1);
    }

    #[test]
    fn semi_step_solves_its_equation() {
        let (g, p) = setup(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth = SteadyTruth {
            field: random_field(&g, &mut rng, 30.0, 1.0),
        };
        let obs = ObservationStream::new(&truth, p.interpolant).unwrap();
        let v0 = random_field(&g, &mut rng, 20.0, 1.0);
        let s = SchemeState::new(0.02, &v0, &p).unwrap();
        let (next, info) = semi_implicit_step(&s, &p, Some(&obs), &SolverSettings::default()).unwrap();
        assert!(info.residual <= 1e-10);
        assert!(p.is_in_galerkin_space(&next.v));
        let op = StepOperator::new(&p, s.tau, &s.v);
        let rhs = step_rhs(&s, &p, Some(&obs)).unwrap();
        assert!((&op.apply(&next.v) - &rhs).norm_h() <= 1e-10 * rhs.norm_h());
    }

    #[test]
    fn full_step_solves_the_nonlinear_equation() {
        let (g, p) = setup(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let truth = SteadyTruth {
            field: random_field(&g, &mut rng, 30.0, 1.0),
        };
        let obs = ObservationStream::new(&truth, p.interpolant).unwrap();
        let v0 = random_field(&g, &mut rng, 20.0, 1.0);
        let s = SchemeState::new(0.02, &v0, &p).unwrap();
        let (next, info) = fully_implicit_step(&s, &p, Some(&obs), &SolverSettings::default()).unwrap();
        assert!(info.picard_iterations >= 2);
        let op = StepOperator::new(&p, s.tau, &next.v);
        let rhs = step_rhs(&s, &p, Some(&obs)).unwrap();
        assert!((&op.apply(&next.v) - &rhs).norm_h() <= 1e-10 * rhs.norm_h());
    }

    #[test]
    fn nudging_without_observations_is_rejected() {
        let (g, p) = setup(1.0);
        let s = SchemeState::new(0.01, &SpectralField::zeros(g), &p).unwrap();
        assert!(matches!(
            semi_implicit_step(&s, &p, None, &SolverSettings::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn one_step_taylor_green_error_is_second_order() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let nu = 0.5;
        let p = PhysicsParams::new(
            nu,
            SpectralField::zeros(g),
            0.0,
            InterpolantSpec::fourier_with_cutoff(1.0).unwrap(),
            GalerkinCutoff::unbounded(&g),
        )
        .unwrap();
        let u0 = taylor_green(&g, 1, 0.0, nu).unwrap();
        let mut errs = Vec::new();
        for tau in [0.04, 0.02, 0.01] {
            let s = SchemeState::new(tau, &u0, &p).unwrap();
            let (next, _) = semi_implicit_step(&s, &p, None, &SolverSettings::default()).unwrap();
            errs.push((&next.v - &taylor_green(&g, 1, tau, nu).unwrap()).norm_h());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "local order {order}");
        }
    }
}
