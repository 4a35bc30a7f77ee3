//! Data pipeline and batch runner for two-phase loan models.
//!
//! Reads the accepted-loan and rejected-application CSV exports, builds the
//! phase-one (accept/reject) and phase-two (default) sample sets, runs the
//! hyperparameter grids from [`lendrisk_core`], and writes JSON reports, CSV
//! tables and model artifacts. The `lendrisk` binary wraps these functions.

pub mod artifact;
pub mod config;
pub mod error;
pub mod ingest;
pub mod monthly;
pub mod pipeline;
pub mod report;
pub mod schema;
pub mod scoring;
pub mod synth;

pub use config::{Phase, RunConfig};
pub use error::{Error, Result};
