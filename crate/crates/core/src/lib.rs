//! Numerical core for two-phase P2P lending models.
//!
//! Phase one replicates the lender's accept/reject decision from the handful of
//! features shared by accepted and rejected applications. Phase two predicts
//! default among issued loans. Everything here is pure computation over
//! in-memory data and only needs `alloc`:
//!
//! - [`dataset`]: column-oriented sample sets with month-resolution dates.
//! - [`preprocess`]: coverage filtering, mean imputation, standard scaling,
//!   one-hot encoding, time-ordered splits, downsampling and class weights.
//! - [`linear`]: weighted logistic regression and linear hinge-loss SVM.
//! - [`neural`]: tanh MLPs with inverted dropout, trained by backpropagation.
//! - [`metrics`]: rank-based AUC and per-class recall reports.
//! - [`grid`]: deterministic hyperparameter grid search.
//! - [`stats`]: monthly default/rejection series with trailing moving statistics.
//!
//! File formats, CSV ingestion and the CLI live in the `lendrisk` crate.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
mod error;
pub mod grid;
pub mod linear;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod neural;
pub mod preprocess;
pub mod rng;
pub mod stats;

pub use dataset::{CategoricalColumn, ColumnKind, ColumnMeta, DroppedColumn, NumericColumn, SampleSet, YearMonth};
pub use error::{Error, Result};
pub use matrix::Matrix;
