//! Greedy-family fixed-budget ranking-and-selection procedures, their
//! boundary-crossing bound calculators, benchmark problems, and a
//! macro-replication experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod error;
pub mod harness;
pub mod parallel;
pub mod problems;
pub mod procedures;
pub mod rng;
pub mod state;

pub use error::{Error, Result};
pub use rng::{derive_stream, RngStream, SimRng};
pub use state::SamplingState;
