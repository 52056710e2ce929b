//! Command-line front end: argument parsing and subcommand drivers.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run, Failure, Outcome};
