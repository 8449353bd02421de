//! Command-line front end: config parsing, mode dispatch and output files.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{config_hash, ExperimentConfig, Mode};
pub use error::{CliError, EXIT_INPUT, EXIT_RUNTIME};
pub use output::emit_plot_data;
pub use run::{run, RunOptions, RunOutcome, MANIFEST};
