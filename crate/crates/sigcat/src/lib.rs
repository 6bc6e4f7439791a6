//! File formats, configuration, reporting, benchmarking and the command
//! line around `sigcat-core`.

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod csvio;
mod error;
pub mod report;

pub use error::{Error, Result};
