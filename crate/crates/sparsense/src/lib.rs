//! Std companion to `sparsense-core`: JSON configs, CSV tables, parallel
//! runners and the `sparsense` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;
pub mod table;

pub use config::ConfigError;
pub use run::RunError;
pub use table::{fmt_float, Table};
