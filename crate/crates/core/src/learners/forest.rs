//! Multi-output regression forest of CART trees.
//!
//! Each tree is grown on a bootstrap sample drawn from a ChaCha8 stream
//! selected by `(seed, tree_index)`, so fits are reproducible and
//! independent of thread scheduling. Splits minimise the summed squared
//! error over all outputs and consider every feature at every node.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::standardize::{check_matrix, Standardizer};
use crate::datamodel::FeatureVector;
use crate::error::{Error, Result};

/// Target name excluded from the confidence average.
pub const GENERALIZED_DSC_TARGET: &str = "generalized_dsc";

pub const MIN_TRAINING_ROWS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub feature_schema: Vec<String>,
    pub target_schema: Vec<String>,
    pub standardizer: Standardizer,
    pub trees: Vec<Tree>,
}

fn bounded_mean<'a>(values: impl Iterator<Item = &'a [f64]>, width: usize) -> Vec<f64> {
    let mut sum = vec![0.0; width];
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    let mut n = 0usize;
    for v in values {
        n += 1;
        for t in 0..width {
            sum[t] += v[t];
            lo[t] = lo[t].min(v[t]);
            hi[t] = hi[t].max(v[t]);
        }
    }
    (0..width)
        .map(|t| (sum[t] / n as f64).clamp(lo[t], hi[t]))
        .collect()
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Vec<f64>],
    min_samples_split: usize,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(mut self, root: Vec<usize>) -> Tree {
        // (node slot, samples)
        let mut stack = vec![(0usize, root)];
        self.nodes.push(Node::Leaf { value: Vec::new() });
        while let Some((slot, samples)) = stack.pop() {
            match self.best_split(&samples) {
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&i| self.x[i][feature] <= threshold);
                    let left = self.nodes.len();
                    self.nodes.push(Node::Leaf { value: Vec::new() });
                    let right = self.nodes.len();
                    self.nodes.push(Node::Leaf { value: Vec::new() });
                    self.nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((right, r));
                    stack.push((left, l));
                }
                None => {
                    let width = self.y[0].len();
                    let value = bounded_mean(samples.iter().map(|&i| self.y[i].as_slice()), width);
                    self.nodes[slot] = Node::Leaf { value };
                }
            }
        }
        Tree { nodes: self.nodes }
    }

    fn best_split(&self, samples: &[usize]) -> Option<(usize, f64)> {
        let n = samples.len();
        if n < self.min_samples_split.max(2) {
            return None;
        }
        let first = &self.y[samples[0]];
        if samples.iter().all(|&i| &self.y[i] == first) {
            return None;
        }
        let width = first.len();
        let mut total = vec![0.0; width];
        for &i in samples {
            for (t, s) in total.iter_mut().enumerate() {
                *s += self.y[i][t];
            }
        }

        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = samples.to_vec();
        let mut left = vec![0.0; width];
        for feature in 0..self.x[0].len() {
            order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            left.fill(0.0);
            for k in 1..n {
                let prev = order[k - 1];
                for (t, s) in left.iter_mut().enumerate() {
                    *s += self.y[prev][t];
                }
                let lo = self.x[prev][feature];
                let hi = self.x[order[k]][feature];
                if lo == hi {
                    continue;
                }
                let (nl, nr) = (k as f64, (n - k) as f64);
                // maximising this is minimising the children's summed SSE
                let score: f64 = (0..width)
                    .map(|t| left[t] * left[t] / nl + (total[t] - left[t]).powi(2) / nr)
                    .sum();
                if best.is_none_or(|(s, _, _)| score > s) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Fits a forest on `features` (n × d) and `targets` (n × T).
pub fn rf_fit(
    features: &[Vec<f64>],
    targets: &[Vec<f64>],
    feature_schema: Vec<String>,
    target_schema: Vec<String>,
    params: &ForestParams,
) -> Result<ForestModel> {
    let n = features.len();
    if n < MIN_TRAINING_ROWS {
        return Err(Error::TooFewSamples {
            needed: MIN_TRAINING_ROWS,
            got: n,
        });
    }
    if targets.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: targets.len(),
        });
    }
    let d = check_matrix(features, "features")?;
    let t = check_matrix(targets, "targets")?;
    if d == 0 || t == 0 {
        return Err(Error::invalid("features", "need at least one feature and one target"));
    }
    if feature_schema.len() != d || target_schema.len() != t {
        return Err(Error::invalid(
            "schema",
            format!(
                "{} feature / {} target names for {d} features and {t} targets",
                feature_schema.len(),
                target_schema.len()
            ),
        ));
    }
    if params.n_trees == 0 {
        return Err(Error::invalid("n_trees", "must be >= 1"));
    }
    let standardizer = Standardizer::fit(features)?;
    let x: Vec<Vec<f64>> = features.iter().map(|r| standardizer.apply(r)).collect();

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|tree_index| {
            let samples: Vec<usize> = if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(tree_index as u64);
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            Grower {
                x: &x,
                y: targets,
                min_samples_split: params.min_samples_split,
                nodes: Vec::new(),
            }
            .grow(samples)
        })
        .collect();

    Ok(ForestModel {
        params: params.clone(),
        feature_schema,
        target_schema,
        standardizer,
        trees,
    })
}

impl ForestModel {
    /// Mean of the per-tree leaf vectors for one raw (unstandardised) row.
    pub fn predict(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.standardizer.width() {
            return Err(Error::LengthMismatch {
                left: self.standardizer.width(),
                right: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("features"));
        }
        let x = self.standardizer.apply(row);
        Ok(bounded_mean(
            self.trees.iter().map(|t| t.leaf(&x)),
            self.target_schema.len(),
        ))
    }

    /// Indices of the per-class DSC targets.
    pub fn class_targets(&self) -> Vec<usize> {
        (0..self.target_schema.len())
            .filter(|&i| self.target_schema[i] != GENERALIZED_DSC_TARGET)
            .collect()
    }
}

/// Mean of the estimated per-class DSC targets.
pub fn rf_confidence(model: &ForestModel, features: &FeatureVector) -> Result<f64> {
    if features.schema() != model.feature_schema.as_slice() {
        return Err(Error::SchemaMismatch {
            expected: model.feature_schema.clone(),
            got: features.schema().to_vec(),
        });
    }
    let estimate = model.predict(features.values())?;
    let idx = model.class_targets();
    if idx.is_empty() {
        return Err(Error::invalid("target_schema", "no per-class targets"));
    }
    let sum: f64 = idx.iter().map(|&i| estimate[i]).sum();
    let lo = idx.iter().map(|&i| estimate[i]).fold(f64::INFINITY, f64::min);
    let hi = idx.iter().map(|&i| estimate[i]).fold(f64::NEG_INFINITY, f64::max);
    Ok((sum / idx.len() as f64).clamp(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn fixture(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let y = x
            .iter()
            .map(|r| vec![r[0] * 0.5 + 0.2, 1.0 - r[1] * 0.3, r[2]])
            .collect();
        (x, y)
    }

    #[test]
    fn constant_target_predicts_constant() {
        let (x, _) = fixture(30, 1);
        let y = vec![vec![0.9, 0.9]; 30];
        let m = rf_fit(&x, &y, names("f", 3), names("dsc_", 2), &ForestParams::default()).unwrap();
        for r in &x {
            assert_eq!(m.predict(r).unwrap(), vec![0.9, 0.9]);
        }
        let fv = FeatureVector::new(vec![0.1, 0.2, 0.3], names("f", 3)).unwrap();
        assert_eq!(rf_confidence(&m, &fv).unwrap(), 0.9);
    }

    #[test]
    fn single_tree_without_bootstrap_memorises() {
        let (x, y) = fixture(40, 2);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            ..Default::default()
        };
        let m = rf_fit(&x, &y, names("f", 3), names("t", 3), &params).unwrap();
        for (r, t) in x.iter().zip(&y) {
            assert_eq!(&m.predict(r).unwrap(), t);
        }
    }

    #[test]
    fn refit_is_identical() {
        let (x, y) = fixture(25, 3);
        let p = ForestParams {
            n_trees: 20,
            seed: 42,
            ..Default::default()
        };
        let a = rf_fit(&x, &y, names("f", 3), names("t", 3), &p).unwrap();
        let b = rf_fit(&x, &y, names("f", 3), names("t", 3), &p).unwrap();
        assert_eq!(a, b);
        let other = rf_fit(&x, &y, names("f", 3), names("t", 3), &ForestParams { seed: 7, ..p }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn confidence_averages_class_targets_only() {
        // one leaf per distinct row; row 0 maps to (0.8, 0.6, gdsc 0.1)
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let y: Vec<Vec<f64>> = (0..5).map(|i| vec![0.8, 0.6, 0.1 * i as f64]).collect();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            ..Default::default()
        };
        let schema = vec!["dsc_1".into(), "dsc_2".into(), GENERALIZED_DSC_TARGET.into()];
        let m = rf_fit(&x, &y, names("f", 1), schema, &params).unwrap();
        let fv = FeatureVector::new(vec![0.0], names("f", 1)).unwrap();
        assert!((rf_confidence(&m, &fv).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn predictions_stay_in_target_range() {
        let (x, y) = fixture(50, 4);
        let m = rf_fit(&x, &y, names("f", 3), names("t", 3), &ForestParams { n_trees: 15, ..Default::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let p = m.predict(&q).unwrap();
            for t in 0..3 {
                let lo = y.iter().map(|r| r[t]).fold(f64::INFINITY, f64::min);
                let hi = y.iter().map(|r| r[t]).fold(f64::NEG_INFINITY, f64::max);
                assert!(lo <= p[t] && p[t] <= hi);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, y) = fixture(4, 5);
        let e = rf_fit(&x, &y, names("f", 3), names("t", 3), &ForestParams::default());
        assert_eq!(e.unwrap_err().code(), "TOO_FEW_SAMPLES");
        let (mut x, y) = fixture(6, 5);
        x[2][1] = f64::NAN;
        let e = rf_fit(&x, &y, names("f", 3), names("t", 3), &ForestParams::default());
        assert_eq!(e.unwrap_err().code(), "NONFINITE_INPUT");
        let (x, y) = fixture(6, 5);
        let m = rf_fit(&x, &y, names("f", 3), names("t", 3), &ForestParams { n_trees: 2, ..Default::default() }).unwrap();
        let fv = FeatureVector::new(vec![0.0; 3], names("g", 3)).unwrap();
        assert_eq!(rf_confidence(&m, &fv).unwrap_err().code(), "SCHEMA_MISMATCH");
    }

    #[test]
    fn model_json_round_trip() {
        let (x, y) = fixture(10, 6);
        let m = rf_fit(&x, &y, names("f", 3), names("t", 3), &ForestParams { n_trees: 3, ..Default::default() }).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: ForestModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
