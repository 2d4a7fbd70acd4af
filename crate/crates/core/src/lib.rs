//! Black-box auditing of feed-filtering algorithms for decision robustness
//! against a user-driven baseline feed.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod family;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod subprocess;

pub use error::{Error, Result};
