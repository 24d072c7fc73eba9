//! Transport-based counterfactual models.
//!
//! The crate couples protected groups with exact discrete optimal transport,
//! builds counterfactual models from those couplings or from structural
//! causal models, evaluates counterfactual fairness metrics, and trains
//! linear predictors under a counterfactual penalty.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cfmodel;
pub mod cli;
pub mod data;
pub mod error;
pub mod fairlearn;
pub mod fairness;
pub mod group;
pub mod linalg;
pub mod rng;
pub mod scm;
pub mod transport;

pub use data::{Dataset, Task};
pub use error::{Error, Result};
pub use group::Group;
