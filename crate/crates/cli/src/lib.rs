//! Configurable sweeps over the rate-splitting solvers, written as CSV.

pub mod config;
pub mod error;
pub mod presets;
pub mod run;

pub use config::{ExperimentConfig, Solver};
pub use error::CliError;
pub use run::{run, to_csv_string, write_csv, RunOptions, Status, SweepRow, SCHEMA_VERSION};
