//! File formats, reports and the command-line driver around `gscale-core`.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;

pub use commands::{run, run_args, Cli, Output};
pub use error::CliError;
