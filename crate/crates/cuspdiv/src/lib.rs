//! File formats, configuration, selftest and the command-line front end
//! for `cuspdiv-core`.

// `!(a > b)` is how NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod dense_kkt;
pub mod error;
pub mod formats;
pub mod selftest;

pub use config::{Command, RunConfig, Settings};
pub use error::{CliError, CliResult};
