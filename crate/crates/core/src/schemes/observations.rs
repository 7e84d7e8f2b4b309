//! Reference solutions and the coarse observations drawn from them.

use crate::error::{Error, Result};
use crate::interpolants::InterpolantSpec;
use crate::operators::{apply_stokes, taylor_green, Advector};
use crate::spectral::{SpectralField, TorusGrid};

use super::params::PhysicsParams;
use super::trajectory::Trajectory;

/// A reference velocity `u(t)`.
pub trait TruthSource: Send + Sync {
    fn grid(&self) -> &TorusGrid;
    fn state(&self, t: f64) -> Result<SpectralField>;
}

/// Time-independent truth, e.g. a steady shear flow.
#[derive(Debug, Clone)]
pub struct SteadyTruth {
    pub field: SpectralField,
}

impl TruthSource for SteadyTruth {
    fn grid(&self) -> &TorusGrid {
        self.field.grid()
    }

    fn state(&self, _t: f64) -> Result<SpectralField> {
        Ok(self.field.clone())
    }
}

/// The decaying vortex array, evaluated in closed form.
#[derive(Debug, Clone)]
pub struct TaylorGreenTruth {
    pub grid: TorusGrid,
    pub kappa: i64,
    pub nu: f64,
}

impl TruthSource for TaylorGreenTruth {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn state(&self, t: f64) -> Result<SpectralField> {
        taylor_green(&self.grid, self.kappa, t, self.nu)
    }
}

/// Uniformly sampled trajectory with piecewise cubic Hermite interpolation in
/// time. Node derivatives come from the equation itself, `f - nu A u - B(u, u)`.
#[derive(Debug, Clone)]
pub struct StoredTruth {
    grid: TorusGrid,
    t0: f64,
    dt: f64,
    states: Vec<SpectralField>,
    rates: Vec<SpectralField>,
}

impl StoredTruth {
    pub fn from_trajectory(traj: &Trajectory, p: &PhysicsParams) -> Result<Self> {
        if traj.len() < 2 {
            return Err(Error::Trajectory("need at least two snapshots to interpolate".into()));
        }
        let t0 = traj.times[0];
        let dt = traj.times[1] - traj.times[0];
        for (i, t) in traj.times.iter().enumerate() {
            let expected = t0 + i as f64 * dt;
            if (t - expected).abs() > 1e-9 * dt.max(expected.abs()) {
                return Err(Error::Trajectory(format!("snapshot {i} at t = {t} breaks uniform spacing {dt}")));
            }
        }
        let rates = traj
            .states
            .iter()
            .map(|u| time_derivative(u, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: p.grid,
            t0,
            dt,
            states: traj.states.clone(),
            rates,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.states.len() - 1) as f64
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt
    }

    /// Estimates the interpolation error in `norm_H` by rebuilding the
    /// interpolant from every other node and comparing at the skipped nodes;
    /// the fourth-order error of the coarse interpolant is divided by 16.
    pub fn interpolation_error_estimate(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut i = 1;
        while i + 1 < self.states.len() {
            let (a, b) = (i - 1, i + 1);
            let mid = hermite(&self.states[a], &self.rates[a], &self.states[b], &self.rates[b], 2.0 * self.dt, 0.5);
            worst = worst.max((&mid - &self.states[i]).norm_h());
            i += 2;
        }
        worst / 16.0
    }
}

fn hermite(
    u0: &SpectralField,
    d0: &SpectralField,
    u1: &SpectralField,
    d1: &SpectralField,
    h: f64,
    s: f64,
) -> SpectralField {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let mut out = u0.scaled(h00);
    out.axpy(h10 * h, d0);
    out.axpy(h01, u1);
    out.axpy(h11 * h, d1);
    out
}

/// `du/dt = f - nu A u - B(u, u)` on the dealiasing band.
pub fn time_derivative(u: &SpectralField, p: &PhysicsParams) -> Result<SpectralField> {
    let b = Advector::new(u)?.apply(u)?;
    let mut out = p.forcing.truncate_to_band();
    out.axpy(-p.nu, &apply_stokes(u));
    out.axpy(-1.0, &b);
    Ok(out)
}

impl TruthSource for StoredTruth {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn state(&self, t: f64) -> Result<SpectralField> {
        let slack = 1e-9 * self.dt;
        if t < self.t0 - slack || t > self.t_end() + slack {
            return Err(Error::Trajectory(format!(
                "time {t} outside stored range [{}, {}]",
                self.t0,
                self.t_end()
            )));
        }
        let x = ((t - self.t0) / self.dt).max(0.0);
        let last = self.states.len() - 1;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            return Ok(self.states[(nearest as usize).min(last)].clone());
        }
        let i = (x.floor() as usize).min(last - 1);
        let s = x - i as f64;
        Ok(hermite(
            &self.states[i],
            &self.rates[i],
            &self.states[i + 1],
            &self.rates[i + 1],
            self.dt,
            s,
        ))
    }
}

/// `t -> P_sigma I_h u(t)`.
pub struct ObservationStream<'a> {
    truth: &'a dyn TruthSource,
    spec: InterpolantSpec,
}

impl<'a> ObservationStream<'a> {
    pub fn new(truth: &'a dyn TruthSource, spec: InterpolantSpec) -> Result<Self> {
        spec.validate_for(truth.grid())?;
        Ok(Self { truth, spec })
    }

    pub fn spec(&self) -> &InterpolantSpec {
        &self.spec
    }

    pub fn truth(&self) -> &dyn TruthSource {
        self.truth
    }

    pub fn observe(&self, t: f64) -> Result<SpectralField> {
        self.spec.apply(&self.truth.state(t)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolants::InterpolantKind;
    use crate::operators::kolmogorov_forcing;
    use crate::spectral::GalerkinCutoff;
    use std::f64::consts::PI;

    #[test]
    fn hermite_reproduces_taylor_green_closely() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let nu = 0.1;
        let p = PhysicsParams::new(
            nu,
            SpectralField::zeros(g),
            0.0,
            InterpolantSpec::new(InterpolantKind::FourierTruncation, 1.0).unwrap(),
            GalerkinCutoff::unbounded(&g),
        )
        .unwrap();
        let dt = 0.1;
        let times: Vec<f64> = (0..11).map(|i| i as f64 * dt).collect();
        let states = times.iter().map(|&t| taylor_green(&g, 1, t, nu).unwrap()).collect();
        let traj = Trajectory {
            steps: (0..11).collect(),
            times,
            states,
        };
        let stored = StoredTruth::from_trajectory(&traj, &p).unwrap();
        let t = 0.537;
        let exact = taylor_green(&g, 1, t, nu).unwrap();
        let err = (&stored.state(t).unwrap() - &exact).norm_h() / exact.norm_h();
        // 4th-order interpolation of e^{-0.2 t}: error ~ (0.2 dt)^4 / 384
        assert!(err < 1e-8, "{err}");
        assert!(stored.interpolation_error_estimate() < 1e-8);
        assert_eq!(stored.state(0.3).unwrap(), traj.states[3]);
        assert!(stored.state(1.5).is_err());
    }

    #[test]
    fn observations_are_interpolated_truth() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let truth = SteadyTruth {
            field: kolmogorov_forcing(&g, 3, 1.0).unwrap(),
        };
        let coarse = InterpolantSpec::fourier_with_cutoff(4.0).unwrap();
        let obs = ObservationStream::new(&truth, coarse).unwrap();
        assert_eq!(obs.observe(1.0).unwrap().norm_h(), 0.0);
        let fine = InterpolantSpec::fourier_with_cutoff(9.0).unwrap();
        let obs = ObservationStream::new(&truth, fine).unwrap();
        assert_eq!(obs.observe(1.0).unwrap(), truth.field);
    }
}
