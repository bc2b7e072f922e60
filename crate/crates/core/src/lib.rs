//! Continuous-time identification of second-order battery equivalent-circuit
//! models together with a spline OCV-SOC curve.
//!
//! The crate is `no_std` with `alloc`. File formats, the CLI and parallel
//! experiment drivers live in the `battid` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bspline;
pub mod ecm;
pub mod error;
pub mod laguerre;
mod math;
pub mod metrics;
pub mod pipeline;
pub mod recovery;
pub mod regression;
pub mod signals;
pub mod solver;
mod svd;

pub use error::{Error, Result};
