//! Command-line experiments, file formats and reports on top of
//! `biphoton-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod plot;
pub mod report;

pub use error::{CliError, Result};
