//! Linear predictors trained under the counterfactual penalty.

mod features;
mod predictor;
mod risk;
mod sweep;
mod train;

pub use features::FeatureMap;
pub use predictor::{LinearPredictor, ModelFile};
pub use risk::{empirical_risk, risk_gradient, Objective};
pub use sweep::{best_constant, default_lambda_grid, evaluate, sweep, sweep_resplit, Metrics, PredictorKind, SweepRow, SweepTable};
pub use train::{train, train_objective, Init, TrainConfig, TrainOutcome};
