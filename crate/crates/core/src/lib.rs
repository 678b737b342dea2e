//! Mortality-risk analysis over routine blood values.
//!
//! The crate covers the whole analysis chain: CSV ingestion and cleaning,
//! nonparametric feature screening, correlation analysis, SMOTE balancing,
//! a histogram gradient-boosting classifier with three baselines, F1²-based
//! evaluation, exhaustive one/two-threshold cut-point search, feature sweeps
//! and decision-mask grids. [`pipeline::run_pipeline`] ties them together.

pub mod datamodel;
pub mod error;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod resample;
pub mod seed;
pub mod stats;
pub mod sweep;
pub mod threshold;

pub use datamodel::{ClassLabel, FeatureCatalog, FeatureNo, FeatureTable};
pub use error::{Error, Result};
pub use metrics::{ConfusionCounts, EvalReport};
