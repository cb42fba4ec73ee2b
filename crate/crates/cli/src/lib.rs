//! Experiment driver for `multiplier-core`: strict JSON configs, per-step
//! conservation CSVs, summaries and convergence tables.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_config, ConfigError, Experiment, ExperimentConfig, Mode};
pub use output::{Stamp, Summary};
pub use runner::{execute, Outcome, RunError, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_PASS};
