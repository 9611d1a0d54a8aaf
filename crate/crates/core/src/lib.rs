//! Active selection of classification features.
//!
//! Each instance carries cheap selection features `z`, a binary label `y`,
//! and expensive classification features `x` that stay hidden until the
//! instance is acquired. The strategies in [`strategies`] decide which
//! candidate to acquire next so that a classifier trained on the acquired
//! `x` improves quickly.
//!
//! * [`dataset`] loads tables, builds stratified splits and tracks the
//!   acquired/candidate partition.
//! * [`learners`] holds the least-squares regressor, its bootstrap ensemble and
//!   the logistic classifier.
//! * [`strategies`] scores candidates (`random`, `u-ascf`, `s-ascf`).
//! * [`harness`] simulates campaigns on labelled data and compares
//!   strategies against random.
//! * [`cli`] backs the `ascf` binary, including the resumable live session.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod learners;
pub mod seed;
pub mod strategies;

pub use error::{AscfError, Result};
