use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub(crate) fn check_matrix(rows: &[Vec<f64>], what: &'static str) -> Result<usize> {
    let width = rows.first().map_or(0, Vec::len);
    if let Some(r) = rows.iter().find(|r| r.len() != width) {
        return Err(Error::LengthMismatch {
            left: width,
            right: r.len(),
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(what));
    }
    Ok(width)
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                got: rows.len(),
            });
        }
        let width = check_matrix(rows, "features")?;
        let n = rows.len() as f64;
        let mut means = Vec::with_capacity(width);
        let mut stds = Vec::with_capacity(width);
        for c in 0..width {
            let first = rows[0][c];
            if rows.iter().all(|r| r[c] == first) {
                means.push(first);
                stds.push(1.0);
                continue;
            }
            let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            stds.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }
}

/// Fits z-score parameters on `rows` and returns them with the transformed
/// matrix. Zero-variance columns become all zeros with a recorded std of 1.
pub fn standardize_fit_apply(rows: &[Vec<f64>]) -> Result<(Standardizer, Vec<Vec<f64>>)> {
    let params = Standardizer::fit(rows)?;
    let out = rows.iter().map(|r| params.apply(r)).collect();
    Ok((params, out))
}
