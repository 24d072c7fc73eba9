//! Datasets: CSV ingestion under a column schema, splitting and synthetic
//! generation from linear additive models.

pub(crate) mod dataset;
pub mod schema;
mod split;
mod synth;

pub use dataset::{Dataset, Task};
pub use schema::{load_csv, load_csv_str, load_csv_with, Encoder, LoadReport, SchemaConfig, SensitiveColumn, Standardizer, TargetColumn};
pub use split::split;
pub use synth::{synth_linear, synth_linear_classification, OutcomeSpec};
