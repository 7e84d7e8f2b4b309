//! Periodic divergence-free vector fields in Fourier representation.

mod field;
mod grid;
mod snapshot;
pub(crate) mod transform;

pub use field::{GalerkinCutoff, RawSpectrum, SpectralField, VelocitySamples, INVARIANT_TOL};
pub(crate) use field::{analyze, synthesize};
pub use grid::TorusGrid;
pub use snapshot::{read_snapshot, write_snapshot};
