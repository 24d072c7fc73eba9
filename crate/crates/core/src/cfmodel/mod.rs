//! Counterfactual models: families of couplings between protected groups,
//! built from optimal transport, from a linear additive structural model, or
//! by the fair-washing construction.

mod build;
mod grouped;
mod io;
mod model;

pub use build::{build_ot_model, build_scm_model, fairwash_coupling, fairwash_model, PARITY_TOL};
pub use grouped::GroupedData;
pub use io::{load_model, save_model, ModelManifest};
pub use model::{CounterfactualModel, ModelKind, ValidationReport};
