//! File formats, experiment runners and command implementations behind the
//! `povm-forge` binary.

pub mod commands;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod record;

pub use error::{CliError, CliResult};
