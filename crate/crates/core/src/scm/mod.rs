//! Acyclic structural causal models: solving, do-interventions, sampling and
//! closed-form counterfactual operators for invertible model classes.

pub mod expr;
mod linear;
mod model;
mod noise;
mod operator;

pub use linear::{LinearAdditiveScm, LinearScmConfig, NoiseList};
pub use model::{
    topological_order, DoIntervention, Exogenous, ExogenousConfig, Node, NodeConfig, Scm, ScmConfig, RESIDUAL_TOL,
};
pub use noise::{JointGaussian, NoiseSpec};
pub use operator::{nonlinear_fixture_operator, FixtureParams, StructuralOperator};
