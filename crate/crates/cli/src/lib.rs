//! `offload` command-line front end: configuration, subcommands and their
//! on-disk outputs.

pub mod commands;
pub mod config;
pub mod format;

pub use commands::Exit;
pub use config::{ConfigError, RunConfig};
