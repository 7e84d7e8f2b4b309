//! Bound constants, admissibility conditions, envelopes and fits.

mod constants;
mod fit;
mod gronwall;
mod series;

pub use constants::{
    bound_constants, check_conditions, AbsoluteConstants, BoundConstants, ConditionCheck, ConditionReport,
    InterpolantConstants,
};
pub use fit::{convergence_order, decay_rate_fit, DecayFit, OrderFit};
pub use gronwall::{gronwall_closed_form, gronwall_envelope, gronwall_envelope_constant};
pub use series::{error_series, DiagnosticsSeries, Norm};
