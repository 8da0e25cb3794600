//! Experiment harness: config handling and the `solve`, `run`, `transfer`
//! and `modelfree-check` commands.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{execute, Command, Outcome, Summary};
pub use config::{ExperimentConfig, MethodName, Overrides, TauSpec};
pub use error::CliError;
