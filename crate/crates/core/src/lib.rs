// Validation writes `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod orbit;
pub mod output;
pub mod phy;
pub mod strategies;

pub use error::{Error, Result};
