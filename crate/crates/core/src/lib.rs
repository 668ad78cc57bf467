//! Explainable handwriting verification over 15 expert-annotated discrete
//! features.
//!
//! Two verification methods share one data model:
//!
//! * [`daam`] compares per-feature class-probability vectors with cosine
//!   similarity and thresholds the mean;
//! * [`laam`] encodes each feature pair as an unordered class-pair code and
//!   scores the code vector with a log-likelihood ratio between a
//!   same-writer and a different-writer Bayesian network.
//!
//! [`explain`] turns either result into a per-feature report.

pub mod daam;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod io;
pub mod laam;
pub mod partition;
pub mod schema;
pub mod synthetic;

pub use data::{Dataset, SampleRecord};
pub use error::{Error, Result};
pub use schema::{builtin_schema, FeatureSchema, NUM_FEATURES};

/// Verdict for a questioned/known pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Same,
    Different,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Same => "same",
            Decision::Different => "different",
        })
    }
}
