//! Sweeps, figure datasets and self-checks on top of `backhaul-core`.

pub mod app;
pub mod config;
pub mod error;
pub mod figures;
pub mod selftest;
pub mod sweep;

pub use error::{CliError, CliResult};
