//! Multivariate Gaussian fit and Mahalanobis-distance confidence.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::standardize::check_matrix;
use crate::error::{Error, Result};

pub const DEFAULT_RIDGE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub mean: Vec<f64>,
    /// Unregularised sample covariance (n − 1 denominator).
    pub covariance: Vec<Vec<f64>>,
    /// Inverse of `covariance + ridge · I`.
    pub precision: Vec<Vec<f64>>,
    pub ridge_epsilon: f64,
    /// Absolute ridge actually added to the diagonal.
    pub ridge: f64,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl GaussianModel {
    /// Builds a model from given moments. The ridge is `ridge_epsilon` times
    /// the mean covariance diagonal, or `ridge_epsilon` itself when that
    /// diagonal is zero.
    pub fn from_moments(mean: Vec<f64>, covariance: Vec<Vec<f64>>, ridge_epsilon: f64) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::EmptyInput);
        }
        if covariance.len() != d || covariance.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("covariance", format!("expected {d}x{d}")));
        }
        if !(ridge_epsilon.is_finite() && ridge_epsilon >= 0.0) {
            return Err(Error::invalid("ridge_epsilon", format!("{ridge_epsilon}")));
        }
        if mean.iter().chain(covariance.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("moments"));
        }
        let cov = DMatrix::from_fn(d, d, |i, j| covariance[i][j]);
        let mean_diag = cov.trace() / d as f64;
        let ridge = if mean_diag > 0.0 {
            ridge_epsilon * mean_diag
        } else {
            ridge_epsilon
        };
        let mut regularised = cov.clone();
        for i in 0..d {
            regularised[(i, i)] += ridge;
        }
        let precision = regularised
            .cholesky()
            .ok_or(Error::SingularAfterRidge)?
            .inverse();
        let precision = (&precision + precision.transpose()) * 0.5;
        if precision.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularAfterRidge);
        }
        Ok(Self {
            mean,
            covariance,
            precision: to_rows(&precision),
            ridge_epsilon,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::dims("feature", &[d], &[x.len()]));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("feature"));
        }
        let diff = DVector::from_fn(d, |i, _| x[i] - self.mean[i]);
        let p = DMatrix::from_fn(d, d, |i, j| self.precision[i][j]);
        let q = diff.dot(&(p * &diff));
        Ok(q.max(0.0).sqrt())
    }
}

/// Sample mean and covariance of `rows` (n × d), regularised and inverted.
pub fn mahalanobis_fit(rows: &[Vec<f64>], ridge_epsilon: f64) -> Result<GaussianModel> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let d = check_matrix(rows, "features")?;
    if d == 0 {
        return Err(Error::EmptyInput);
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let s: f64 = rows
                .iter()
                .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                .sum::<f64>()
                / (n - 1) as f64;
            cov[i][j] = s;
            cov[j][i] = s;
        }
    }
    GaussianModel::from_moments(mean, cov, ridge_epsilon)
}

/// Negative Mahalanobis distance: closer to the training distribution means
/// more confident.
pub fn mahalanobis_confidence(model: &GaussianModel, feature: &[f64]) -> Result<f64> {
    Ok(-model.distance(feature)?)
}
