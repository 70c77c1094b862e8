//! Configuration loading, command dispatch and artifact output for `fif`.

pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

pub use commands::{CliError, Flags};
pub use config::{load_config, parse_config, RunConfig};
