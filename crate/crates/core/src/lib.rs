//! Failure detection evaluation for semantic segmentation.
//!
//! Computes per-case segmentation risks, image-level confidence scores from
//! pixel confidence maps, ensembles and learned models, and risk-coverage
//! analysis with bootstrap ranking.

pub mod aggregation;
pub mod datamodel;
pub mod edt;
pub mod error;
mod grid;
pub mod io;
pub mod learners;
pub mod pairwise;
pub mod risk_coverage;
pub mod segmetrics;
pub mod stats;

pub use datamodel::{
    CaseRecord, ConfidenceMap, FeatureVector, LabelData, LabelMap, LabelMode, RiskMetric, RiskSpec,
};
pub use error::{Error, Result};
pub use segmetrics::ProbabilityMap;
pub mod pipeline;
