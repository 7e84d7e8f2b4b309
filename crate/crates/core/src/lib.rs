//! Nudging data assimilation for the 2D periodic Navier-Stokes equations with
//! spectral Galerkin discretization and implicit Euler time stepping.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod interpolants;
pub mod operators;
pub mod random;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
