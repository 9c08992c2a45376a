//! Command-line driver for the `dicke` library: config files, parameter
//! sweeps, CSV / JSON-lines records and plot export.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod record;

pub use error::{CliError, Result};
