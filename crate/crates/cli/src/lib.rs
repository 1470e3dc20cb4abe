//! Command-line front end: scenario files, experiment commands and CSV output.

pub mod app;
pub mod commands;
pub mod error;
pub mod scenario_file;

pub use app::run;
pub use error::{CliError, Result};
