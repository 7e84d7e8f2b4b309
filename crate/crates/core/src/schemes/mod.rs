//! Time discretizations of the nudged Galerkin system and their drivers.

mod integrate;
mod krylov;
mod observations;
mod params;
mod stepper;
mod trajectory;

pub use integrate::{nse_integrate, reference_galerkin_integrate, run_scheme, step, whole_steps};
pub use krylov::{gmres, solve_coercive_linear, GmresSettings, LinearSolveInfo};
pub use observations::{time_derivative, ObservationStream, SteadyTruth, StoredTruth, TaylorGreenTruth, TruthSource};
pub use params::{PhysicsParams, Scheme, SchemeState, SolverSettings};
pub use stepper::{fully_implicit_step, semi_implicit_step, StepInfo};
pub use trajectory::{load_trajectory, save_trajectory, write_atomic, AtomicCsv, Trajectory, TrajectoryStore};
