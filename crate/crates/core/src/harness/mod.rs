//! Configuration, experiment drivers and reports.

pub mod checks;
pub mod config;
pub mod experiments;
pub mod report;

pub use config::{config_to_string, load_config, parse_config, write_config, ConfigWarning, ExperimentConfig};
pub use experiments::{
    run_contraction_test, run_n_sweep, run_stability_soak, run_tau_sweep, run_twin_experiment, Setup,
};
pub use report::{write_report, ExperimentReport, Status};
