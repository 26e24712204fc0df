//! File formats, configuration and subcommand drivers behind the
//! `npcluster` binary.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod plot;

pub use error::{CliError, ErrorKind};
