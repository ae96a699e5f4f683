//! Ensemble-agreement confidence: mean DSC over all unordered sample pairs.

use rayon::prelude::*;

use crate::datamodel::{validate_pair, LabelMap};
use crate::error::{Error, Result};
use crate::segmetrics::mean_dsc;

/// Average of `mean_dsc` over all `M·(M−1)/2` unordered pairs of `samples`.
pub fn pairwise_dsc(samples: &[LabelMap]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    for s in &samples[1..] {
        validate_pair(&samples[0], s)?;
    }
    let pairs: Vec<(usize, usize)> = (0..samples.len())
        .flat_map(|i| (i + 1..samples.len()).map(move |j| (i, j)))
        .collect();
    let scores = pairs
        .par_iter()
        .map(|&(i, j)| mean_dsc(&samples[i], &samples[j]))
        .collect::<Result<Vec<f64>>>()?;
    // sort so the sum does not depend on sample order
    let mut sorted = scores;
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    Ok((sorted.iter().sum::<f64>() / sorted.len() as f64).clamp(lo, hi))
}
