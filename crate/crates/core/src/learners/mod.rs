//! Trained confidence scorers: a regression forest over simple features and a
//! Gaussian (Mahalanobis) scorer over externally supplied feature vectors.

pub mod forest;
pub mod gaussian;
pub mod standardize;

pub use forest::{rf_confidence, rf_fit, ForestModel, ForestParams, GENERALIZED_DSC_TARGET};
pub use gaussian::{mahalanobis_confidence, mahalanobis_fit, GaussianModel, DEFAULT_RIDGE_EPSILON};
pub use standardize::{standardize_fit_apply, Standardizer};
