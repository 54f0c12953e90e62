//! Experiment runner behind the `ergokit` binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, RawConfig, RunConfig};
pub use run::{memory_estimate, run, Report, RunError};
