//! Command-line driver for `darktraj-core`: ensemble and artifact file
//! formats, experiment configs and the pipeline stages behind each
//! subcommand.

pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod stages;

pub use cli::run;
pub use error::CliError;
