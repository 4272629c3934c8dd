//! Config-driven front end: parses an [`ExperimentConfig`], runs one
//! subcommand and writes CSV/JSON artifacts with a manifest.
//!
//! Exit status: 0 on success, 2 when inputs fail validation, 3 when the
//! requested precision cannot certify a result, 1 on I/O failure.

pub mod compare;
pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use compare::{compare_discrete_continuous, CompareReport};
pub use config::ExperimentConfig;
pub use error::CliError;
pub use run::{run, run_experiment, Command, Overrides, RunOutcome};

/// Environment variable supplying the default of `--precision`.
pub const PRECISION_ENV: &str = "TORUSFLOW_PRECISION_BITS";
