//! Config parsing, experiment orchestration and CSV output on top of
//! `adaptsc-core`.

pub mod commands;
pub mod config;

pub use commands::{run, Command};
pub use config::{load, parse, ConfigError, ExperimentConfig};
