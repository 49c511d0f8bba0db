//! Command-line front end: configuration loading, grid and table files, and
//! the subcommands that turn a configuration into plot-ready data.

pub mod config;
pub mod error;
pub mod gridfile;
pub mod run;

pub use config::{load_config, parse_config, RunConfig};
pub use error::{CliError, Result};
pub use gridfile::{read_grid, read_table, write_grid, write_table, Format, GridFile};
pub use run::{run, Artifact, Subcommand};
