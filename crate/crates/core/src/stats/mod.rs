//! Auxiliary evaluation metrics for confidence scoring functions.

mod ranking;

pub use ranking::{
    bootstrap_ranking, FoldRecords, MethodRecords, RankDistribution, RankingMetric,
    DEFAULT_N_BOOTSTRAP,
};

use crate::error::{Error, Result};

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("correlation input"));
    }
    Ok(())
}

/// Fractional ranks starting at 1; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let constant = |v: &[f64]| v.iter().all(|&e| e == v[0]);
    if constant(x) || constant(y) || sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of average-tie ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Mann–Whitney AUROC: probability that a positive scores above a negative,
/// ties counting one half.
pub fn auroc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFiniteInput("scores"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok((u / (n_pos as f64 * n_neg as f64)).clamp(0.0, 1.0))
}

/// AUROC of negated confidence against failures (`risk > failure_threshold`).
pub fn f_auroc(risks: &[f64], confidences: &[f64], failure_threshold: f64) -> Result<f64> {
    if risks.len() != confidences.len() {
        return Err(Error::LengthMismatch {
            left: risks.len(),
            right: confidences.len(),
        });
    }
    let labels: Vec<bool> = risks.iter().map(|&r| r > failure_threshold).collect();
    let scores: Vec<f64> = confidences.iter().map(|c| -c).collect();
    auroc(&labels, &scores)
}

/// AUROC of negated confidence against the out-of-distribution flag.
pub fn ood_auroc(is_ood: &[bool], confidences: &[f64]) -> Result<f64> {
    let scores: Vec<f64> = confidences.iter().map(|c| -c).collect();
    auroc(is_ood, &scores)
}

pub fn mae(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| (e - t).abs())
        .sum();
    Ok(sum / estimates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair_oracle(labels: &[bool], scores: &[f64]) -> f64 {
        let mut credit = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        credit += 1.0;
                    } else if scores[i] == scores[j] {
                        credit += 0.5;
                    }
                }
            }
        }
        credit / pairs
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[3.0, 3.0, 3.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_examples() {
        let x = [0.3, 1.0, -2.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((spearman(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &neg).unwrap() + 1.0).abs() < 1e-15);

        // ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4): centred (-1.5, 0, 0, 1.5), (-1.5, -0.5, 0.5, 1.5)
        let expected = (2.25 + 2.25) / ((4.5f64).sqrt() * 5.0f64.sqrt());
        let s = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s - expected).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]).unwrap_err().code(), "CONSTANT_INPUT");
        assert_eq!(spearman(&[1.0], &[1.0, 2.0]).unwrap_err().code(), "LENGTH_MISMATCH");
    }

    #[test]
    fn pearson_examples() {
        let x = [0.5, 1.5, -2.0, 3.0, 0.0];
        let affine: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let scaled: Vec<f64> = x.iter().map(|v| -3.0 * v).collect();
        assert!((pearson(&x, &affine).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &scaled).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&[1.0, -1.0, 1.0, -1.0], &[1.0, 1.0, -1.0, -1.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[true, true, false], &[0.9, 0.8, 0.1]).unwrap(), 1.0);
        assert_eq!(auroc(&[true, false, true, false], &[0.4; 4]).unwrap(), 0.5);
        let labels = [true, false, true, false];
        let scores = [0.7, 0.7, 0.2, 0.5];
        assert_eq!(auroc(&labels, &scores).unwrap(), pair_oracle(&labels, &scores));
        assert_eq!(pair_oracle(&labels, &scores), 0.375);
        assert_eq!(auroc(&[true, true], &[0.1, 0.2]).unwrap_err().code(), "SINGLE_CLASS");
    }

    #[test]
    fn failure_auroc_examples() {
        assert_eq!(f_auroc(&[0.1, 0.9], &[2.0, 1.0], 0.5).unwrap(), 1.0);
        let risks = [0.2, 0.8, 0.6, 0.1, 0.55];
        let conf: Vec<f64> = risks.iter().map(|r| -r).collect();
        assert_eq!(f_auroc(&risks, &conf, 0.5).unwrap(), 1.0);
        assert_eq!(f_auroc(&[0.1, 0.2], &[1.0, 2.0], 0.5).unwrap_err().code(), "SINGLE_CLASS");
    }

    #[test]
    fn ood_auroc_examples() {
        assert_eq!(ood_auroc(&[false, true, false, true], &[0.9, 0.1, 0.8, 0.2]).unwrap(), 1.0);
        assert_eq!(ood_auroc(&[true, false, false, true], &[0.3; 4]).unwrap(), 0.5);
        let ood = [true, false, true, false, false, true];
        let conf = [0.2, 0.9, 0.5, 0.5, 0.1, 0.3];
        let neg: Vec<f64> = conf.iter().map(|c| -c).collect();
        assert_eq!(ood_auroc(&ood, &conf).unwrap(), pair_oracle(&ood, &neg));
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert!((mae(&[0.6, 0.2], &[0.5, 0.1]).unwrap() - 0.1).abs() < 1e-15);
        assert!((mae(&[0.2, 0.8], &[0.4, 0.4]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(mae(&[], &[]).unwrap_err().code(), "EMPTY_INPUT");
    }

    proptest! {
        #[test]
        fn spearman_is_rank_invariant(
            xy in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..20),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
            if let Ok(s) = spearman(&x, &y) {
                let tx: Vec<f64> = x.iter().map(|v| v.exp() * 3.0 - 1.0).collect();
                prop_assert!((s - spearman(&tx, &y).unwrap()).abs() < 1e-12);
                let p = pearson(&x, &y).unwrap();
                let ax: Vec<f64> = x.iter().map(|v| 2.5 * v + 7.0).collect();
                prop_assert!((p - pearson(&ax, &y).unwrap()).abs() < 1e-9);
            }
        }

        #[test]
        fn auroc_matches_pair_enumeration(
            data in proptest::collection::vec((any::<bool>(), 0i32..6), 2..30),
        ) {
            let labels: Vec<bool> = data.iter().map(|d| d.0).collect();
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.1)).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let a = auroc(&labels, &scores).unwrap();
            prop_assert!((a - pair_oracle(&labels, &scores)).abs() < 1e-12);
        }

        #[test]
        fn auroc_complement(
            data in proptest::collection::vec((any::<bool>(), -1.0f64..1.0), 2..30),
        ) {
            let labels: Vec<bool> = data.iter().map(|d| d.0).collect();
            let scores: Vec<f64> = data.iter().map(|d| d.1).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted.windows(2).all(|w| w[0] < w[1]));
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            prop_assert!((auroc(&labels, &scores).unwrap() + auroc(&labels, &neg).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
