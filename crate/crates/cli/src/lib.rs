//! Configuration, file formats and workflows for the `treedamp` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::{Problem, ProblemConfig};
pub use error::CliError;
