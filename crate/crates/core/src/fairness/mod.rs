//! Accuracy, parity and counterfactual fairness metrics.

mod counterfactual;
mod metrics;
mod predictor;

pub use counterfactual::{cfr, cft, check_deterministic_cf, default_epsilon, CfTolerance, DeterministicReport, CFT_TOL};
pub use metrics::{accuracy, ks_distance, mse, normalized_variance, parity_gap};
pub use predictor::{ConstantPredictor, FnPredictor, Predictor};
