//! File formats, configuration, experiment drivers and the command line for
//! `battid-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod fixture;
pub mod report;
pub mod tune;

pub use error::{Error, Result};
