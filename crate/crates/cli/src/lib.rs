//! Config-driven runner around the `tubecond` core: spectra, conductivity
//! sweeps, line lists, time-domain oracle comparisons and convergence studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
mod error;
pub mod manifest;
pub mod runner;

pub use config::{load_config, JobKind, RunConfig};
pub use error::{CliError, Result};
pub use manifest::ResultManifest;
pub use runner::run_jobs;
