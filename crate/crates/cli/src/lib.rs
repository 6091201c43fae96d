//! File formats and the command-line surface for the `kernelexpand` crate.

pub mod annotations;
pub mod commands;
pub mod error;
pub mod fsutil;
pub mod maptensor;
pub mod pgm;

pub use commands::run;
pub use error::{CliError, Result};
