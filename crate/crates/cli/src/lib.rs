//! Library side of the `fcls` command-line tool.

pub mod args;
pub mod checks;
pub mod commands;

pub use args::Cli;
pub use commands::{run, CliError};
