use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::interpolants::InterpolantSpec;
use crate::spectral::{GalerkinCutoff, SpectralField, TorusGrid};

use super::krylov::GmresSettings;

/// Physical and discretization parameters of the nudged Galerkin system.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsParams {
    pub nu: f64,
    pub grid: TorusGrid,
    /// Time-independent body force.
    pub forcing: SpectralField,
    /// Nudging gain (1/time).
    pub beta: f64,
    pub interpolant: InterpolantSpec,
    /// Galerkin truncation; an unbounded cutoff keeps the whole dealiasing band.
    pub cutoff: GalerkinCutoff,
    /// Absolute constant in the lower bound on `beta`.
    pub condition_constant: f64,
}

impl PhysicsParams {
    pub fn new(
        nu: f64,
        forcing: SpectralField,
        beta: f64,
        interpolant: InterpolantSpec,
        cutoff: GalerkinCutoff,
    ) -> Result<Self> {
        let p = Self {
            nu,
            grid: *forcing.grid(),
            forcing,
            beta,
            interpolant,
            cutoff,
            condition_constant: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::Config(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Config(format!("nudging gain must be nonnegative, got {}", self.beta)));
        }
        if self.forcing.grid() != &self.grid {
            return Err(Error::GridMismatch("forcing lives on a different grid".into()));
        }
        if !self.cutoff.is_unbounded() && !self.cutoff.fits_band(&self.grid) {
            return Err(Error::Config(format!(
                "cutoff {} exceeds the dealiasing band of an n = {} grid",
                self.cutoff.lambda_cut(),
                self.grid.n()
            )));
        }
        self.interpolant.validate_for(&self.grid)
    }

    /// Same parameters with a different nudging gain.
    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn with_cutoff(&self, cutoff: GalerkinCutoff) -> Self {
        Self { cutoff, ..self.clone() }
    }

    /// `P_N`, additionally restricted to the dealiasing band.
    pub fn project(&self, f: &SpectralField) -> SpectralField {
        let g = self.grid;
        let cutoff = self.cutoff;
        f.map_modes(|i1, i2| {
            if g.in_band(i1, i2) && cutoff.contains(&g, i1, i2) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// True when `f` has no content outside the Galerkin space.
    pub fn is_in_galerkin_space(&self, f: &SpectralField) -> bool {
        f.is_band_limited() && f.is_supported_in(&self.cutoff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    SemiImplicit,
    FullyImplicit,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SemiImplicit => "semi_implicit",
            Self::FullyImplicit => "fully_implicit",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi" | "semi_implicit" => Ok(Self::SemiImplicit),
            "full" | "fully_implicit" => Ok(Self::FullyImplicit),
            other => Err(Error::Config(format!("unknown scheme '{other}' (expected semi or full)"))),
        }
    }
}

/// Algebraic tolerances of a time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub linear: GmresSettings,
    /// Relative tolerance on the nonlinear residual and on the `V`-norm
    /// increment of the Picard iteration.
    pub picard_tol: f64,
    pub max_picard: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            linear: GmresSettings {
                tol: 1e-11,
                max_iter: 500,
                restart: 50,
            },
            picard_tol: 1e-10,
            max_picard: 100,
        }
    }
}

/// Step index, step size and current Galerkin iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub k: usize,
    pub tau: f64,
    pub v: SpectralField,
}

impl SchemeState {
    /// Starts from `P_N v0`.
    pub fn new(tau: f64, v0: &SpectralField, p: &PhysicsParams) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {tau}")));
        }
        if v0.grid() != &p.grid {
            return Err(Error::GridMismatch("initial condition lives on a different grid".into()));
        }
        Ok(Self {
            k: 0,
            tau,
            v: p.project(v0),
        })
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.tau
    }
}
