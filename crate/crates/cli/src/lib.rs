//! Library side of the `classrefine` command: each subcommand is a function
//! from parsed arguments to the bytes it prints.

mod error;

pub mod commands;
pub mod experiment;
pub mod output;
pub mod script;

pub use error::CliError;
