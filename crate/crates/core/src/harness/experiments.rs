//! Experiment drivers: twin assimilation, step-size and cutoff sweeps,
//! stability soaks and contraction tests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    bound_constants, check_conditions, convergence_order, decay_rate_fit, BoundConstants, ConditionReport,
    InterpolantConstants,
};
use crate::error::{Error, Result};
use crate::interpolants::{estimate_c0, estimate_c_minus1, InterpolantKind};
use crate::operators::{kolmogorov_forcing, kolmogorov_steady_state, phi1};
use crate::random::{random_field, with_norm_h, with_norm_v};
use crate::schemes::{
    nse_integrate, reference_galerkin_integrate, step, time_derivative, whole_steps, ObservationStream, PhysicsParams,
    Scheme, SchemeState, SolverSettings, SteadyTruth, StoredTruth, TaylorGreenTruth, TruthSource,
};
use crate::spectral::{GalerkinCutoff, SpectralField, TorusGrid};

use super::config::{ExperimentConfig, ForcingKind, InitialKind, TruthKind};
use super::report::{ConstantsBlock, ExperimentReport, SeriesRow, SeriesTable, Status};

const STREAM_FORCING: u64 = 1;
const STREAM_TRUTH: u64 = 2;
const STREAM_INITIAL: u64 = 3;
const STREAM_PERTURBATION: u64 = 4;
const STREAM_ESTIMATES: u64 = 5;

/// Independent random stream `stream` of the experiment seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Physical parameters together with their derived constants and conditions.
#[derive(Debug, Clone)]
pub struct Setup {
    pub params: PhysicsParams,
    pub bounds: BoundConstants,
    pub interp: InterpolantConstants,
    pub conditions: ConditionReport,
    /// Amplitude of the Kolmogorov forcing, when that forcing is used.
    pub kolmogorov_amplitude: Option<f64>,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let ph = &cfg.physics;
        let grid = TorusGrid::new(ph.length, ph.n)?;
        let target = cfg.forcing.grashof * ph.nu * ph.nu * grid.lambda1();
        let mut kolmogorov_amplitude = None;
        let forcing = match &cfg.forcing.kind {
            _ if target == 0.0 => SpectralField::zeros(grid),
            ForcingKind::None => SpectralField::zeros(grid),
            ForcingKind::Kolmogorov { kappa } => {
                let unit = kolmogorov_forcing(&grid, *kappa, 1.0)?;
                let a = target / unit.norm_h();
                kolmogorov_amplitude = Some(a);
                unit.scaled(a)
            }
            ForcingKind::PowerLaw { exponent, max_k2 } => {
                let mut rng = seeded_rng(cfg.seed, STREAM_FORCING);
                with_norm_h(&random_field(&grid, &mut rng, *max_k2, *exponent), target)
            }
        };
        let cutoff = match ph.lambda_cut {
            None => GalerkinCutoff::unbounded(&grid),
            Some(l) => GalerkinCutoff::new(&grid, l)?,
        };
        let mut params = PhysicsParams::new(ph.nu, forcing, ph.beta, cfg.interpolant, cutoff)?;
        params.condition_constant = cfg.constants.c_beta;
        let interp = interpolant_constants(cfg, &grid)?;
        let bounds = bound_constants(&params, &cfg.constants);
        let conditions = check_conditions(&params, &bounds, &interp, &cfg.constants, Some(cfg.tau));
        Ok(Self {
            params,
            bounds,
            interp,
            conditions,
            kolmogorov_amplitude,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.params.grid
    }

    /// Empty report carrying the constants, conditions and seed.
    pub fn report(&self, name: &str, cfg: &ExperimentConfig) -> ExperimentReport {
        let block = ConstantsBlock {
            absolute: cfg.constants,
            bounds: self.bounds,
            interpolant: self.interp,
            conditions: self.conditions.clone(),
        };
        let mut r = ExperimentReport::new(name, cfg.seed, cfg.scheme.to_string(), Some(block));
        r.value("tau", cfg.tau);
        r.value("t_end", cfg.t_end);
        r.value("burn_in", cfg.burn_in);
        r.value("nu", self.params.nu);
        r.value("beta", self.params.beta);
        r.value("h", self.params.interpolant.h);
        r.value("lambda_cut", self.params.cutoff.lambda_cut());
        r.value("n", self.grid().n() as f64);
        r.value("length", self.grid().length());
        r.value("forcing_norm_h", self.params.forcing.norm_h());
        r.note(format!(
            "burn-in {} is a configured stand-in for the unspecified absorbing times; tail results depend on it",
            cfg.burn_in
        ));
        r
    }

    /// `6 M_1 / lambda_1^{1/2}` and `6 M_1`.
    pub fn stability_bounds(&self) -> (f64, f64) {
        let m1 = self.bounds.m1;
        (6.0 * m1 / self.grid().lambda1().sqrt(), 6.0 * m1)
    }
}

fn interpolant_constants(cfg: &ExperimentConfig, grid: &TorusGrid) -> Result<InterpolantConstants> {
    match cfg.interpolant.kind {
        // Both inequalities hold with constant 1 for a sharp spectral cutoff at 1/h^2.
        InterpolantKind::FourierTruncation => Ok(InterpolantConstants { c0: 1.0, c_minus1: 1.0 }),
        InterpolantKind::VolumeAverage => {
            let mut rng = seeded_rng(cfg.seed, STREAM_ESTIMATES);
            let trials = cfg.checks.c0_trials.max(10);
            Ok(InterpolantConstants {
                c0: estimate_c0(&cfg.interpolant, grid, trials, &mut rng)?,
                c_minus1: estimate_c_minus1(&cfg.interpolant, grid, trials, &mut rng)?,
            })
        }
    }
}

/// Reference solution behind the observations.
pub enum Truth {
    Steady(SteadyTruth),
    TaylorGreen(TaylorGreenTruth),
    Stored(StoredTruth),
}

impl TruthSource for Truth {
    fn grid(&self) -> &TorusGrid {
        match self {
            Self::Steady(t) => t.grid(),
            Self::TaylorGreen(t) => t.grid(),
            Self::Stored(t) => t.grid(),
        }
    }

    fn state(&self, t: f64) -> Result<SpectralField> {
        match self {
            Self::Steady(s) => s.state(t),
            Self::TaylorGreen(s) => s.state(t),
            Self::Stored(s) => s.state(t),
        }
    }
}

/// Truth parameters: no nudging, whole dealiasing band.
fn truth_params(setup: &Setup) -> PhysicsParams {
    setup
        .params
        .with_beta(0.0)
        .with_cutoff(GalerkinCutoff::unbounded(setup.grid()))
}

fn random_truth_start(cfg: &ExperimentConfig, setup: &Setup) -> SpectralField {
    let mut rng = seeded_rng(cfg.seed, STREAM_TRUTH);
    let f = random_field(setup.grid(), &mut rng, f64::INFINITY, cfg.truth.initial_decay);
    with_norm_v(&f, cfg.truth.initial_fraction * setup.bounds.m1)
}

/// Relaxes the unnudged equation with large semi-implicit steps until
/// `|f - nu A u - B(u, u)| <= tol |f|`.
pub fn relax_to_steady_state(
    u0: &SpectralField,
    p: &PhysicsParams,
    tol: f64,
    solver: &SolverSettings,
) -> Result<SpectralField> {
    const RELAX_TAU: f64 = 0.5;
    const MAX_STEPS: usize = 20_000;
    let target = tol * p.forcing.norm_h().max(f64::MIN_POSITIVE);
    let mut state = SchemeState::new(RELAX_TAU / p.grid.lambda1(), u0, p)?;
    let mut residual = f64::INFINITY;
    for k in 0..MAX_STEPS {
        if k.is_multiple_of(10) {
            residual = time_derivative(&state.v, p)?.norm_h();
            if residual <= target {
                log::info!("steady state reached after {k} relaxation steps (residual {residual:.3e})");
                return Ok(state.v);
            }
        }
        state = robust_step(Scheme::SemiImplicit, &state, p, None, solver)?;
    }
    Err(Error::Trajectory(format!(
        "relaxation did not reach a steady state (residual {residual:.3e} > {target:.3e})"
    )))
}

/// Builds the truth covering `[0, horizon]`; numerical truths use step `tau_fine`.
pub fn build_truth(cfg: &ExperimentConfig, setup: &Setup, horizon: f64, tau_fine: f64) -> Result<Truth> {
    match cfg.truth.source {
        TruthKind::Kolmogorov => {
            let kappa = match cfg.forcing.kind {
                ForcingKind::Kolmogorov { kappa } => kappa,
                _ => return Err(Error::Config("analytic Kolmogorov truth needs Kolmogorov forcing".into())),
            };
            let a = setup.kolmogorov_amplitude.unwrap_or(0.0);
            Ok(Truth::Steady(SteadyTruth {
                field: kolmogorov_steady_state(setup.grid(), kappa, a, setup.params.nu)?,
            }))
        }
        TruthKind::TaylorGreen => {
            if setup.params.forcing.norm_h() != 0.0 {
                return Err(Error::Config("Taylor-Green truth needs zero forcing".into()));
            }
            Ok(Truth::TaylorGreen(TaylorGreenTruth {
                grid: *setup.grid(),
                kappa: cfg.truth.taylor_green_kappa,
                nu: setup.params.nu,
            }))
        }
        TruthKind::NseSteady => {
            let p = truth_params(setup);
            let u0 = random_truth_start(cfg, setup);
            let u = relax_to_steady_state(&u0, &p, cfg.truth.steady_tol, &cfg.solver)?;
            Ok(Truth::Steady(SteadyTruth { field: u }))
        }
        TruthKind::NseIntegrate => {
            let p = truth_params(setup);
            let mut u0 = random_truth_start(cfg, setup);
            if cfg.truth.spin_up > 0.0 {
                let traj = nse_integrate(&u0, &p, cfg.truth.spin_up, tau_fine, cfg.truth.spin_up, &cfg.solver)?;
                u0 = traj.last().expect("spin-up records its end").clone();
            }
            let every = cfg.truth.store_every;
            let samples = (horizon / every - 1e-9).ceil().max(1.0);
            let traj = nse_integrate(&u0, &p, samples * every, tau_fine, every, &cfg.solver)?;
            Ok(Truth::Stored(StoredTruth::from_trajectory(&traj, &p)?))
        }
    }
}

/// Initial datum `v^0` as configured.
pub fn initial_field(cfg: &ExperimentConfig, setup: &Setup, truth: &dyn TruthSource) -> Result<SpectralField> {
    let grid = setup.grid();
    let scale = if setup.bounds.m1 > 0.0 {
        setup.bounds.m1
    } else {
        truth.state(0.0)?.norm_v()
    };
    let mut rng = seeded_rng(cfg.seed, STREAM_INITIAL);
    let random = |rng: &mut ChaCha8Rng| {
        with_norm_v(
            &random_field(grid, rng, f64::INFINITY, cfg.initial.decay),
            cfg.initial.fraction * scale,
        )
    };
    match cfg.initial.kind {
        InitialKind::Zero => Ok(SpectralField::zeros(*grid)),
        InitialKind::Random => Ok(random(&mut rng)),
        InitialKind::PerturbedTruth => Ok(&truth.state(0.0)? + &random(&mut rng)),
    }
}

/// One step; a Picard failure is retried as two half steps, at most three
/// levels deep.
pub fn robust_step(
    scheme: Scheme,
    state: &SchemeState,
    p: &PhysicsParams,
    obs: Option<&ObservationStream>,
    solver: &SolverSettings,
) -> Result<SchemeState> {
    fn go(
        scheme: Scheme,
        state: &SchemeState,
        p: &PhysicsParams,
        obs: Option<&ObservationStream>,
        solver: &SolverSettings,
        depth: u32,
    ) -> Result<SchemeState> {
        match step(scheme, state, p, obs, solver) {
            Ok((next, _)) => Ok(next),
            Err(Error::Picard { iterations, residual, .. }) if depth < 3 => {
                log::warn!(
                    "Picard failed at t = {:.6} ({iterations} iterations, residual {residual:.3e}); halving the step",
                    state.time()
                );
                let half = SchemeState {
                    k: 2 * state.k,
                    tau: 0.5 * state.tau,
                    v: state.v.clone(),
                };
                let a = go(scheme, &half, p, obs, solver, depth + 1)?;
                let b = go(scheme, &a, p, obs, solver, depth + 1)?;
                Ok(SchemeState {
                    k: state.k + 1,
                    tau: state.tau,
                    v: b.v,
                })
            }
            Err(e) => Err(e),
        }
    }
    go(scheme, state, p, obs, solver, 0)
}

/// Maps `f` over `items` on a pool of scoped worker threads; output order
/// matches input order.
pub fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

fn record_stride(cfg: &ExperimentConfig, tau: f64) -> usize {
    ((cfg.checks.record_every / tau).round() as usize).max(1)
}

fn state_row(state: &SchemeState) -> SeriesRow {
    let mut row = SeriesRow::new(state.k, state.time());
    row.norm_h = state.v.norm_h();
    row.norm_v = state.v.norm_v();
    row.norm_da = state.v.norm_da();
    row
}

struct TwinRun {
    table: SeriesTable,
    times: Vec<f64>,
    err_h: Vec<f64>,
    max_norm_v_tail: f64,
    failure: Option<Error>,
}

#[allow(clippy::too_many_arguments)]
fn run_against_truth(
    name: &str,
    cfg: &ExperimentConfig,
    setup: &Setup,
    p: &PhysicsParams,
    obs: Option<&ObservationStream>,
    truth: &dyn TruthSource,
    v0: &SpectralField,
    tau: f64,
    steps: usize,
) -> Result<TwinRun> {
    let stride = record_stride(cfg, tau);
    let (env_h, env_v) = setup.stability_bounds();
    let mut run = TwinRun {
        table: SeriesTable::new(name),
        times: Vec::new(),
        err_h: Vec::new(),
        max_norm_v_tail: 0.0,
        failure: None,
    };
    let record = |state: &SchemeState, run: &mut TwinRun| -> Result<()> {
        let t = state.time();
        if t >= cfg.burn_in - 1e-12 {
            run.max_norm_v_tail = run.max_norm_v_tail.max(state.v.norm_v());
        }
        if state.k.is_multiple_of(stride) || state.k == steps {
            let e = &state.v - &truth.state(t)?;
            let mut row = state_row(state);
            row.err_h = e.norm_h();
            row.err_v = e.norm_v();
            row.envelope_h = env_h;
            row.envelope_v = env_v;
            run.times.push(t);
            run.err_h.push(row.err_h);
            run.table.rows.push(row);
        }
        Ok(())
    };
    let mut state = SchemeState::new(tau, v0, p)?;
    record(&state, &mut run)?;
    for _ in 0..steps {
        match robust_step(cfg.scheme, &state, p, obs, &cfg.solver) {
            Ok(next) => state = next,
            Err(e) => {
                log::error!("{name}: step {} failed: {e}", state.k + 1);
                run.failure = Some(e);
                break;
            }
        }
        record(&state, &mut run)?;
    }
    Ok(run)
}

/// Twin experiment: nudge a mismatched `v^0` towards observations of a
/// known truth and measure the error decay, with an unnudged control.
pub fn run_twin_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let setup = Setup::new(cfg)?;
    let mut report = setup.report("twin", cfg);
    let steps = whole_steps(cfg.t_end, cfg.tau, "t_end")?;
    let truth = build_truth(cfg, &setup, cfg.t_end, cfg.tau / cfg.truth.tau_ratio as f64)?;
    if let Truth::Stored(s) = &truth {
        report.value("truth_interpolation_error", s.interpolation_error_estimate());
    }
    let obs = ObservationStream::new(&truth, cfg.interpolant)?;
    let v0 = initial_field(cfg, &setup, &truth)?;
    let p = &setup.params;
    if !setup.conditions.basic_conditions_hold() {
        report.note("gain or resolution condition fails; decay is not guaranteed");
    }

    let run = run_against_truth("twin", cfg, &setup, p, Some(&obs), &truth, &v0, cfg.tau, steps)?;
    if let Some(e) = &run.failure {
        report.check("twin_solver", false, e.to_string());
    }
    match decay_rate_fit(&run.times, &run.err_h) {
        Ok(fit) => {
            report.value("decay_rate", fit.rate);
            report.value("decay_floor", fit.floor);
            report.value("decay_decades", fit.decades);
            report.value("initial_error_h", run.err_h[0]);
            report.check(
                "twin_decay",
                fit.decades >= cfg.checks.min_decades && fit.rate > 0.0,
                format!(
                    "H error fell {:.2} decades (need {}) at rate {:.3}",
                    fit.decades, cfg.checks.min_decades, fit.rate
                ),
            );
        }
        Err(e) => report.check("twin_decay", false, e.to_string()),
    }
    let (_, bound_v) = setup.stability_bounds();
    report.value("max_norm_v_after_burn_in", run.max_norm_v_tail);
    report.check(
        "twin_stability_bound",
        run.max_norm_v_tail <= bound_v,
        format!("max ||v|| after burn-in {:.4e} vs 6 M1 = {:.4e}", run.max_norm_v_tail, bound_v),
    );
    report.series.push(run.table);

    if cfg.checks.run_control {
        let p0 = p.with_beta(0.0);
        let control = run_against_truth("control", cfg, &setup, &p0, None, &truth, &v0, cfg.tau, steps)?;
        let e0 = control.err_h[0];
        let e_end = *control.err_h.last().expect("initial row");
        let drop = (e0 / e_end).log10();
        report.value("control_decades", drop);
        report.check(
            "control_no_decay",
            control.failure.is_none() && drop < cfg.checks.control_max_decades,
            format!(
                "unnudged H error fell {drop:.2} decades (limit {})",
                cfg.checks.control_max_decades
            ),
        );
        report.series.push(control.table);
    }
    Ok(report)
}

fn require_len(list: &[f64], min: usize, what: &str) -> Result<()> {
    if list.len() < min {
        return Err(Error::Config(format!(
            "{what} needs at least {min} values, got {}",
            list.len()
        )));
    }
    Ok(())
}

struct TauPoint {
    sup_h: f64,
    sup_v: f64,
    table: SeriesTable,
    failure: Option<Error>,
}

/// Step-size sweep for both schemes against a shared fine-step reference.
pub fn run_tau_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    require_len(&cfg.sweep.tau, 4, "sweep.tau")?;
    let setup = Setup::new(cfg)?;
    let mut report = setup.report("tau_sweep", cfg);
    report.scheme = "semi_implicit,fully_implicit".into();
    let taus = &cfg.sweep.tau;
    let tau_min = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_ref = tau_min / cfg.truth.tau_ratio as f64;
    for &tau in taus {
        whole_steps(cfg.t_end, tau, "t_end")?;
        whole_steps(tau, tau_min, "swept step")?;
    }
    report.value("tau_reference", tau_ref);
    let truth = build_truth(cfg, &setup, cfg.t_end, tau_ref)?;
    let obs = ObservationStream::new(&truth, cfg.interpolant)?;
    let v0 = initial_field(cfg, &setup, &truth)?;
    let p = &setup.params;
    let reference = reference_galerkin_integrate(&v0, p, Some(&obs), cfg.t_end, tau_ref, tau_min, &cfg.solver)?;
    report.note("both schemes are compared with the same semi-implicit fine-step reference");

    for scheme in [Scheme::SemiImplicit, Scheme::FullyImplicit] {
        let points = parallel_map(taus, |&tau| -> Result<TauPoint> {
            let steps = whole_steps(cfg.t_end, tau, "t_end")?;
            let stride = record_stride(cfg, tau);
            let mut point = TauPoint {
                sup_h: 0.0,
                sup_v: 0.0,
                table: SeriesTable::new(format!("tau_sweep_{scheme}_{tau}")),
                failure: None,
            };
            let mut state = SchemeState::new(tau, &v0, p)?;
            for k in 0..=steps {
                if k > 0 {
                    match robust_step(scheme, &state, p, Some(&obs), &cfg.solver) {
                        Ok(next) => state = next,
                        Err(e) => {
                            point.failure = Some(e);
                            break;
                        }
                    }
                }
                let t = state.time();
                let j = reference
                    .index_at(t, 1e-9 * t.max(1.0))
                    .ok_or_else(|| Error::Trajectory(format!("reference has no state at t = {t}")))?;
                let e = &state.v - &reference.states[j];
                let (eh, ev) = (e.norm_h(), e.norm_v());
                if t >= cfg.burn_in - 1e-12 {
                    point.sup_h = point.sup_h.max(eh);
                    point.sup_v = point.sup_v.max(ev);
                }
                if k.is_multiple_of(stride) || k == steps {
                    let mut row = state_row(&state);
                    row.err_h = eh;
                    row.err_v = ev;
                    point.table.rows.push(row);
                }
            }
            Ok(point)
        });
        let mut pairs_h = Vec::new();
        let mut pairs_v = Vec::new();
        let mut failed = false;
        for (&tau, point) in taus.iter().zip(points) {
            let point = point?;
            if let Some(e) = &point.failure {
                report.check(format!("tau_sweep_{scheme}_solver_{tau}"), false, e.to_string());
                failed = true;
            }
            report.value(format!("{scheme}_sup_err_h_tau_{tau}"), point.sup_h);
            report.value(format!("{scheme}_sup_err_v_tau_{tau}"), point.sup_v);
            pairs_h.push((tau, point.sup_h));
            pairs_v.push((tau, point.sup_v));
            report.series.push(point.table);
        }
        for (norm, pairs, lo, hi) in [("h", &pairs_h, 0.8, 1.2), ("v", &pairs_v, 0.7, 1.2)] {
            let name = format!("tau_order_{scheme}_{norm}");
            match convergence_order(pairs) {
                Ok(fit) => {
                    report.value(format!("{scheme}_order_{norm}"), fit.slope);
                    report.check(
                        name,
                        !failed && (lo..=hi).contains(&fit.slope),
                        format!("{} slope {:.3} (band [{lo}, {hi}])", norm.to_uppercase(), fit.slope),
                    );
                }
                Err(e) => report.check(name, false, e.to_string()),
            }
        }
    }
    Ok(report)
}

struct CutoffPoint {
    lambda_n: f64,
    lambda_next: f64,
    l_n: f64,
    galerkin_h: f64,
    galerkin_v: f64,
    post_h: f64,
    post_v: f64,
    tau_floor_h: f64,
    phi_tail_error: f64,
    tail_h: f64,
    table: SeriesTable,
}

#[allow(clippy::too_many_arguments)]
fn run_to_end(
    scheme: Scheme,
    cfg: &ExperimentConfig,
    p: &PhysicsParams,
    obs: &ObservationStream,
    truth: &dyn TruthSource,
    v0: &SpectralField,
    tau: f64,
    table: Option<&mut SeriesTable>,
) -> Result<SpectralField> {
    let steps = whole_steps(cfg.t_end, tau, "t_end")?;
    let stride = record_stride(cfg, tau);
    let mut rows = Vec::new();
    let mut state = SchemeState::new(tau, v0, p)?;
    for k in 0..=steps {
        if k > 0 {
            state = robust_step(scheme, &state, p, Some(obs), &cfg.solver)?;
        }
        if table.is_some() && (k.is_multiple_of(stride) || k == steps) {
            let e = &state.v - &truth.state(state.time())?;
            let mut row = state_row(&state);
            row.err_h = e.norm_h();
            row.err_v = e.norm_v();
            rows.push(row);
        }
    }
    if let Some(t) = table {
        t.rows = rows;
    }
    Ok(state.v)
}

/// Galerkin cutoff sweep comparing the plain and the postprocessed error at
/// the final time.
pub fn run_n_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    require_len(&cfg.sweep.lambda_cut, 3, "sweep.lambda_cut")?;
    let setup = Setup::new(cfg)?;
    let mut report = setup.report("n_sweep", cfg);
    let truth = build_truth(cfg, &setup, cfg.t_end, cfg.tau / cfg.truth.tau_ratio as f64)?;
    let obs = ObservationStream::new(&truth, cfg.interpolant)?;
    let v0 = initial_field(cfg, &setup, &truth)?;
    let u = truth.state(cfg.t_end)?;
    let grid = *setup.grid();
    let lambda1 = grid.lambda1();

    let points = parallel_map(&cfg.sweep.lambda_cut, |&cut| -> Result<CutoffPoint> {
        let cutoff = GalerkinCutoff::new(&grid, cut)?;
        let p = setup.params.with_cutoff(cutoff);
        p.validate()?;
        let mut table = SeriesTable::new(format!("n_sweep_{cut}"));
        let v = run_to_end(cfg.scheme, cfg, &p, &obs, &truth, &v0, cfg.tau, Some(&mut table))?;
        let v_half = run_to_end(cfg.scheme, cfg, &p, &obs, &truth, &v0, 0.5 * cfg.tau, None)?;
        let correction = phi1(&v, &p.forcing, p.nu, &cutoff)?;
        let e = &v - &u;
        let pe = &e + &correction;
        let pu = u.project_low(&cutoff);
        let qu = u.project_high(&cutoff);
        let phi_u = phi1(&pu, &p.forcing, p.nu, &cutoff)?;
        let lambda_n = cutoff.lambda_n();
        Ok(CutoffPoint {
            lambda_n,
            lambda_next: cutoff
                .lambda_next()
                .ok_or_else(|| Error::Config(format!("cutoff {cut} keeps every mode of the grid")))?,
            l_n: (1.0 + (lambda_n / lambda1).ln()).sqrt(),
            galerkin_h: e.norm_h(),
            galerkin_v: e.norm_v(),
            post_h: pe.norm_h(),
            post_v: pe.norm_v(),
            tau_floor_h: (&v - &v_half).norm_h(),
            phi_tail_error: (&phi_u - &qu).norm_h(),
            tail_h: qu.norm_h(),
            table,
        })
    });

    let mut improves = true;
    let mut phi_ok = true;
    let mut worst_floor = 0.0f64;
    let mut pairs = Vec::new();
    let mut pairs_v = Vec::new();
    for (&cut, point) in cfg.sweep.lambda_cut.iter().zip(points) {
        let pt = match point {
            Ok(pt) => pt,
            Err(e) => {
                report.check(format!("n_sweep_solver_{cut}"), false, e.to_string());
                improves = false;
                continue;
            }
        };
        let key = |s: &str| format!("cut_{cut}_{s}");
        report.value(key("lambda_n"), pt.lambda_n);
        report.value(key("lambda_next"), pt.lambda_next);
        report.value(key("l_n"), pt.l_n);
        report.value(key("galerkin_err_h"), pt.galerkin_h);
        report.value(key("galerkin_err_v"), pt.galerkin_v);
        report.value(key("post_err_h"), pt.post_h);
        report.value(key("post_err_v"), pt.post_v);
        report.value(key("improvement_h"), pt.galerkin_h / pt.post_h);
        report.value(key("tau_floor_h"), pt.tau_floor_h);
        report.value(key("tail_h"), pt.tail_h);
        report.value(key("phi1_tail_error_h"), pt.phi_tail_error);
        improves &= pt.post_h <= pt.galerkin_h;
        phi_ok &= pt.phi_tail_error < pt.tail_h;
        worst_floor = worst_floor.max(pt.tau_floor_h / pt.post_h);
        pairs.push((pt.lambda_next, pt.post_h / pt.l_n));
        pairs_v.push((pt.lambda_next, pt.post_v / pt.l_n));
        report.series.push(pt.table);
    }
    report.check(
        "postprocessing_improves_h",
        improves,
        "|v + Phi1(v) - u| <= |v - u| at every cutoff".to_string(),
    );
    report.value("tau_floor_ratio", worst_floor);
    report.check(
        "tau_floor_subdominant",
        worst_floor <= cfg.checks.tau_floor_ratio,
        format!(
            "largest |v(tau) - v(tau/2)| / postprocessed error {worst_floor:.3e} (limit {})",
            cfg.checks.tau_floor_ratio
        ),
    );
    report.check(
        "phi1_reproduces_tail",
        phi_ok,
        "|Phi1(P_N u) - Q_N u| < |Q_N u| at every cutoff".to_string(),
    );
    match convergence_order(&pairs) {
        Ok(fit) => {
            report.value("post_slope_h", fit.slope);
            report.check(
                "postprocessed_slope_h",
                (-1.6..=-0.9).contains(&fit.slope),
                format!("slope {:.3} of postprocessed H error / L_N (band [-1.6, -0.9])", fit.slope),
            );
        }
        Err(e) => report.check("postprocessed_slope_h", false, e.to_string()),
    }
    if let Ok(fit) = convergence_order(&pairs_v) {
        report.value("post_slope_v", fit.slope);
    }
    Ok(report)
}

struct SoakPoint {
    tau: f64,
    max_ratio: f64,
    steps_done: usize,
    bound_violation: Option<(usize, f64)>,
    stepwise_violation: Option<(usize, f64)>,
    energy_violation: Option<(usize, f64)>,
    dump: Option<SpectralField>,
    table: SeriesTable,
    failure: Option<Error>,
}

/// Long runs checking the uniform bound, the stepwise growth bound and
/// (semi-implicit) the energy inequality at every step.
pub fn run_stability_soak(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let setup = Setup::new(cfg)?;
    let mut report = setup.report("soak", cfg);
    let taus = if cfg.checks.soak_taus.is_empty() {
        vec![cfg.tau]
    } else {
        cfg.checks.soak_taus.clone()
    };
    let steps = cfg.checks.soak_steps;
    let horizon = taus.iter().copied().fold(0.0, f64::max) * steps as f64;
    let truth = build_truth(cfg, &setup, horizon, cfg.tau / cfg.truth.tau_ratio as f64)?;
    let obs = ObservationStream::new(&truth, cfg.interpolant)?;
    let v0 = initial_field(cfg, &setup, &truth)?;
    let p = &setup.params;
    let m1 = setup.bounds.m1;
    let m0 = setup.bounds.m0;
    let (env_h, env_v) = setup.stability_bounds();
    let f2 = p.forcing.norm_h().powi(2);
    let lambda1 = setup.grid().lambda1();
    let hypotheses = setup.conditions.basic_conditions_hold();
    if !hypotheses {
        report.note("gain or resolution condition fails; the bounds are not guaranteed");
    }
    let slack = |x: f64| x * (1.0 + 1e-9) + 1e-14;

    let points = parallel_map(&taus, |&tau| -> Result<SoakPoint> {
        let stride = record_stride(cfg, tau);
        let mut pt = SoakPoint {
            tau,
            max_ratio: 0.0,
            steps_done: 0,
            bound_violation: None,
            stepwise_violation: None,
            energy_violation: None,
            dump: None,
            table: SeriesTable::new(format!("soak_{}_{tau}", cfg.scheme)),
            failure: None,
        };
        let mut state = SchemeState::new(tau, &v0, p)?;
        let mut row = state_row(&state);
        row.envelope_h = env_h;
        row.envelope_v = env_v;
        pt.table.rows.push(row);
        pt.max_ratio = state.v.norm_v() / env_v;
        for _ in 0..steps {
            let next = match robust_step(cfg.scheme, &state, p, Some(&obs), &cfg.solver) {
                Ok(next) => next,
                Err(e) => {
                    pt.failure = Some(e);
                    pt.dump = Some(state.v.clone());
                    break;
                }
            };
            let k = next.k;
            let (h0, v0n) = (state.v.norm_h(), state.v.norm_v());
            let (h1, v1n) = (next.v.norm_h(), next.v.norm_v());
            pt.max_ratio = pt.max_ratio.max(v1n / env_v);
            if v1n > slack(env_v) && pt.bound_violation.is_none() {
                pt.bound_violation = Some((k, v1n));
                pt.dump.get_or_insert_with(|| next.v.clone());
            }
            let stepwise = 4.0 * v0n * v0n + 40.0 * m1 * m1;
            if v1n * v1n > slack(stepwise) && pt.stepwise_violation.is_none() {
                pt.stepwise_violation = Some((k, v1n * v1n / stepwise));
                pt.dump.get_or_insert_with(|| next.v.clone());
            }
            if cfg.scheme == Scheme::SemiImplicit && p.beta > 0.0 {
                let lhs = (1.0 + tau * (0.5 * p.beta + p.nu * lambda1)) * h1 * h1;
                let rhs = h0 * h0 + 6.0 * tau * f2 / p.beta + 6.0 * tau * p.beta * m0 * m0 + 6.0 * tau * p.nu * m1 * m1;
                if lhs > slack(rhs) && pt.energy_violation.is_none() {
                    pt.energy_violation = Some((k, lhs / rhs));
                    pt.dump.get_or_insert_with(|| next.v.clone());
                }
            }
            state = next;
            pt.steps_done = k;
            if k.is_multiple_of(stride) || k == steps {
                let mut row = state_row(&state);
                row.envelope_h = env_h;
                row.envelope_v = env_v;
                pt.table.rows.push(row);
            }
        }
        Ok(pt)
    });

    for point in points {
        let pt = point?;
        let tau = pt.tau;
        let tag = format!("{}_tau_{tau}", cfg.scheme);
        report.value(format!("{tag}_max_norm_v_over_6m1"), pt.max_ratio);
        report.value(format!("{tag}_steps"), pt.steps_done as f64);
        if let Some(e) = &pt.failure {
            report.check(format!("soak_solver_{tag}"), false, e.to_string());
        }
        let status = |ok: bool| {
            if ok {
                Status::Pass
            } else if hypotheses {
                Status::Fail
            } else {
                Status::Skipped
            }
        };
        let describe = |v: Option<(usize, f64)>, what: &str| match v {
            None => format!("{what} held at all {} steps", pt.steps_done),
            Some((k, x)) => format!("{what} violated first at step {k} (value {x:.6e})"),
        };
        report.criterion(
            format!("soak_bound_{tag}"),
            status(pt.bound_violation.is_none()),
            format!(
                "{}; max ||v|| / (6 M1) = {:.4}",
                describe(pt.bound_violation, "||v|| <= 6 M1"),
                pt.max_ratio
            ),
        );
        report.criterion(
            format!("soak_stepwise_{tag}"),
            status(pt.stepwise_violation.is_none()),
            describe(pt.stepwise_violation, "||v^{k+1}||^2 <= 4 ||v^k||^2 + 40 M1^2"),
        );
        if cfg.scheme == Scheme::SemiImplicit {
            report.criterion(
                format!("soak_energy_{tag}"),
                status(pt.energy_violation.is_none()),
                describe(pt.energy_violation, "energy inequality"),
            );
        }
        if let Some(d) = pt.dump {
            report.snapshots.push((format!("soak_dump_{tag}"), d));
        }
        report.series.push(pt.table);
    }
    Ok(report)
}

/// Two runs from nearby initial data against the same observations; their
/// difference must stay below the geometric envelope.
pub fn run_contraction_test(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let setup = Setup::new(cfg)?;
    let mut report = setup.report("contraction", cfg);
    let p = &setup.params;
    let tau = cfg.tau;
    let steps = cfg.checks.contraction_steps;
    let name = format!("contraction_{}", cfg.scheme);
    if cfg.scheme == Scheme::SemiImplicit && tau * p.beta > 1.0 {
        report.criterion(
            name,
            Status::Skipped,
            format!("out of hypothesis: tau beta = {:.3} > 1", tau * p.beta),
        );
        return Ok(report);
    }
    let truth = build_truth(cfg, &setup, tau * steps as f64, tau / cfg.truth.tau_ratio as f64)?;
    let obs = ObservationStream::new(&truth, cfg.interpolant)?;
    let v0 = initial_field(cfg, &setup, &truth)?;
    let mut rng = seeded_rng(cfg.seed, STREAM_PERTURBATION);
    let scale = if setup.bounds.m1 > 0.0 { setup.bounds.m1 } else { v0.norm_v() };
    let perturbation = with_norm_v(
        &random_field(setup.grid(), &mut rng, f64::INFINITY, cfg.initial.decay),
        cfg.checks.contraction_perturbation * scale,
    );
    let mut a = SchemeState::new(tau, &v0, p)?;
    let mut b = SchemeState::new(tau, &(&v0 + &perturbation), p)?;
    let use_v = cfg.scheme == Scheme::FullyImplicit;
    let measure = |e: &SpectralField| if use_v { e.norm_v() } else { e.norm_h() }.powi(2);
    let q = 1.0 + 0.25 * tau * (p.beta + p.nu * setup.grid().lambda1());
    let e0 = measure(&(&b.v - &a.v));
    let stride = record_stride(cfg, tau);
    let mut table = SeriesTable::new(name.clone());
    let mut worst = 0.0f64;
    let mut violation: Option<usize> = None;
    let mut failure = None;
    let mut envelope = e0;
    for k in 0..=steps {
        if k > 0 {
            let next = robust_step(cfg.scheme, &a, p, Some(&obs), &cfg.solver)
                .and_then(|na| Ok((na, robust_step(cfg.scheme, &b, p, Some(&obs), &cfg.solver)?)));
            match next {
                Ok((na, nb)) => {
                    a = na;
                    b = nb;
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
            envelope /= q;
        }
        let e = &b.v - &a.v;
        let m = measure(&e);
        if k > 0 {
            worst = worst.max(m / envelope);
        }
        if m > envelope * (1.0 + 1e-9) && violation.is_none() {
            violation = Some(k);
            report.snapshots.push((format!("{name}_dump"), e.clone()));
        }
        if k.is_multiple_of(stride) || k == steps {
            let mut row = state_row(&a);
            row.err_h = e.norm_h();
            row.err_v = e.norm_v();
            if use_v {
                row.envelope_v = envelope.sqrt();
            } else {
                row.envelope_h = envelope.sqrt();
            }
            table.rows.push(row);
        }
    }
    report.value("initial_difference_sq", e0);
    report.value("max_ratio_to_envelope", worst);
    report.value("contraction_factor", q);
    let norm = if use_v { "||e||^2" } else { "|e|^2" };
    match (failure, violation) {
        (Some(e), _) => report.check(name, false, format!("solver failure: {e}")),
        (None, Some(k)) => report.check(name, false, format!("{norm} exceeded the envelope first at step {k}")),
        (None, None) => report.check(
            name,
            true,
            format!("{norm} below the envelope at all {steps} steps; max ratio {worst:.4}"),
        ),
    }
    report.series.push(table);
    Ok(report)
}
