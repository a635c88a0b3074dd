//! Configuration, dispatch and report writing for the `dbar` command.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_with, render_config, Command, ConfigError, RunConfig};
pub use run::{run, EXIT_OK, EXIT_PROPERTY_FAILURE, EXIT_USAGE};
