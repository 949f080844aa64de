//! Classical causal models: deterministic strategies, the explicit
//! hidden-variable models of the open/closed and quantum-control
//! experiments, and classical membership tests.

pub mod hv;
pub mod membership;
pub mod strategy;

pub use hv::{qdce_hv_model, wdce_hv_model, wdce_hv_spec, ControlSpec, HvModelSpec};
pub use membership::{classical_membership, classical_membership_with, Exclusion, Membership};
pub use strategy::{enumerate_strategies, enumerate_strategies_capped, DeterministicStrategy, StrategyMixture};
