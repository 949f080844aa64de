//! Device-independent analysis of delayed-choice interferometer experiments.
//!
//! The crate computes exact single-photon statistics for three
//! interferometer set-ups, builds classical hidden-variable models for them,
//! and tests the statistics against two-dimensional classical models with
//! dimension witnesses and linear programs over deterministic strategies.
//!
//! Outcome `d = 0` is always the click of the monitored detector E at the
//! constructive-interference port.

pub mod causal;
pub mod error;
pub mod interferometer;
pub mod prob;
pub mod retro;
pub mod verify;
pub mod witness;

pub use error::{Error, Result};
pub use prob::{mix, Behavior, JointBehavior, Scenario, ThreeOutcomeBehavior};
