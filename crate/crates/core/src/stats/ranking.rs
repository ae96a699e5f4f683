//! Bootstrap ranking stability of confidence scoring methods.
//!
//! Resample indices come from ChaCha8 seeded with the user seed; each
//! `(fold, draw)` pair reads its own stream `fold << 32 | draw`, so results
//! do not depend on how draws are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{average_ranks, spearman};
use crate::error::{Error, Result};
use crate::risk_coverage::{aurc, aurc_optimal, aurc_random, naurc, rc_curve};

pub const DEFAULT_N_BOOTSTRAP: usize = 500;

/// Score used to order methods within a draw; lower ranks first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingMetric {
    #[default]
    Aurc,
    Naurc,
    Spearman,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecords {
    pub case_ids: Vec<String>,
    pub risks: Vec<f64>,
    pub confidences: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRecords {
    pub name: String,
    pub folds: Vec<FoldRecords>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDistribution {
    pub method_names: Vec<String>,
    /// Possible average ranks: 1, 1.5, 2, ..., m.
    pub rank_grid: Vec<f64>,
    /// `rank_counts[method][k]` counts draws where the method had `rank_grid[k]`.
    pub rank_counts: Vec<Vec<u64>>,
    pub median_rank: Vec<f64>,
    pub n_bootstrap: usize,
    pub n_folds: usize,
    pub seed: u64,
    pub metric: RankingMetric,
}

impl RankDistribution {
    /// `method,median_rank` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,median_rank\n");
        for (m, r) in self.method_names.iter().zip(&self.median_rank) {
            out.push_str(&format!("{},{}\n", crate::io::csv_field(m), r));
        }
        out
    }
}

/// Lower is better for every metric.
fn score(metric: RankingMetric, risks: &[f64], confidences: &[f64]) -> Result<f64> {
    match metric {
        RankingMetric::Aurc => Ok(aurc(&rc_curve(risks, confidences)?)),
        RankingMetric::Naurc => {
            let value = aurc(&rc_curve(risks, confidences)?);
            // constant risks: no confidence can do better than random
            Ok(naurc(value, aurc_random(risks)?, aurc_optimal(risks)?).unwrap_or(1.0))
        }
        RankingMetric::Spearman => {
            // good scorers rank confidence against the metric (1 − risk) positively
            match spearman(confidences, risks) {
                Ok(rho) => Ok(rho),
                Err(Error::ConstantInput) => Ok(0.0),
                Err(e) => Err(e),
            }
        }
    }
}

fn check_alignment(methods: &[MethodRecords]) -> Result<usize> {
    let first = methods.first().ok_or(Error::EmptyInput)?;
    let n_folds = first.folds.len();
    if n_folds == 0 {
        return Err(Error::MisalignedCases(format!("method `{}` has no folds", first.name)));
    }
    for m in methods {
        if m.folds.len() != n_folds {
            return Err(Error::MisalignedCases(format!(
                "method `{}` has {} folds, `{}` has {n_folds}",
                m.name,
                m.folds.len(),
                first.name
            )));
        }
        for (f, fold) in m.folds.iter().enumerate() {
            let n = fold.case_ids.len();
            if fold.risks.len() != n || fold.confidences.len() != n {
                return Err(Error::MisalignedCases(format!(
                    "method `{}` fold {f}: {n} cases, {} risks, {} confidences",
                    m.name,
                    fold.risks.len(),
                    fold.confidences.len()
                )));
            }
            if fold.case_ids != first.folds[f].case_ids {
                return Err(Error::MisalignedCases(format!(
                    "method `{}` fold {f} covers different cases than `{}`",
                    m.name, first.name
                )));
            }
            if n == 0 {
                return Err(Error::EmptyFold(f));
            }
        }
    }
    Ok(n_folds)
}

/// Distribution of per-method ranks over bootstrap resamples of each fold.
pub fn bootstrap_ranking(
    methods: &[MethodRecords],
    n_bootstrap: usize,
    seed: u64,
    metric: RankingMetric,
) -> Result<RankDistribution> {
    let n_folds = check_alignment(methods)?;
    if n_bootstrap == 0 {
        return Err(Error::invalid("n_bootstrap", "must be >= 1"));
    }
    let m = methods.len();
    let grid_len = 2 * m - 1;
    let mut rank_counts = vec![vec![0u64; grid_len]; m];
    let mut all_ranks: Vec<Vec<f64>> = vec![Vec::with_capacity(n_bootstrap * n_folds); m];

    for fold in 0..n_folds {
        let n = methods[0].folds[fold].case_ids.len();
        let draws: Vec<Vec<f64>> = (0..n_bootstrap)
            .into_par_iter()
            .map(|draw| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((fold as u64) << 32) | draw as u64);
                let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let scores = methods
                    .iter()
                    .map(|method| {
                        let f = &method.folds[fold];
                        let r: Vec<f64> = idx.iter().map(|&i| f.risks[i]).collect();
                        let c: Vec<f64> = idx.iter().map(|&i| f.confidences[i]).collect();
                        score(metric, &r, &c)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(average_ranks(&scores))
            })
            .collect::<Result<_>>()?;
        for ranks in draws {
            for (method, &rank) in ranks.iter().enumerate() {
                rank_counts[method][(2.0 * rank) as usize - 2] += 1;
                all_ranks[method].push(rank);
            }
        }
    }

    let median_rank = all_ranks
        .iter_mut()
        .map(|ranks| {
            ranks.sort_by(f64::total_cmp);
            let k = ranks.len();
            if k % 2 == 1 {
                ranks[k / 2]
            } else {
                (ranks[k / 2 - 1] + ranks[k / 2]) / 2.0
            }
        })
        .collect();

    Ok(RankDistribution {
        method_names: methods.iter().map(|m| m.name.clone()).collect(),
        rank_grid: (0..grid_len).map(|k| 1.0 + k as f64 / 2.0).collect(),
        rank_counts,
        median_rank,
        n_bootstrap,
        n_folds,
        seed,
        metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fold(risks: Vec<f64>, confidences: Vec<f64>) -> FoldRecords {
        FoldRecords {
            case_ids: (0..risks.len()).map(|i| format!("c{i}")).collect(),
            risks,
            confidences,
        }
    }

    fn spread_risks(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn single_method_always_first() {
        let r = spread_risks(10);
        let methods = vec![MethodRecords {
            name: "only".into(),
            folds: vec![fold(r.clone(), r.clone())],
        }];
        let d = bootstrap_ranking(&methods, 50, 1, RankingMetric::Aurc).unwrap();
        assert_eq!(d.median_rank, vec![1.0]);
        assert_eq!(d.rank_counts, vec![vec![50]]);
    }

    #[test]
    fn dominating_method_ranks_first() {
        let r = spread_risks(20);
        let good: Vec<f64> = r.iter().map(|x| -x).collect();
        let methods = vec![
            MethodRecords { name: "anti".into(), folds: vec![fold(r.clone(), r.clone()), fold(r.clone(), r.clone())] },
            MethodRecords { name: "opt".into(), folds: vec![fold(r.clone(), good.clone()), fold(r.clone(), good.clone())] },
        ];
        let d = bootstrap_ranking(&methods, 100, 3, RankingMetric::Aurc).unwrap();
        assert_eq!(d.median_rank, vec![2.0, 1.0]);
        for counts in &d.rank_counts {
            assert_eq!(counts.iter().sum::<u64>(), 200);
        }
        let again = bootstrap_ranking(&methods, 100, 3, RankingMetric::Aurc).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn identical_methods_tie() {
        let r = spread_risks(8);
        let c: Vec<f64> = (0..8).map(|i| ((i * 5) % 8) as f64).collect();
        let rec = MethodRecords { name: "a".into(), folds: vec![fold(r.clone(), c.clone())] };
        let twin = MethodRecords { name: "b".into(), ..rec.clone() };
        let d = bootstrap_ranking(&[rec, twin], 30, 0, RankingMetric::Naurc).unwrap();
        assert_eq!(d.median_rank, vec![1.5, 1.5]);
        assert_eq!(d.rank_counts[0], vec![0, 30, 0]);
        let total: f64 = d.median_rank.iter().sum();
        assert_eq!(total, 3.0);
    }

    #[test]
    fn spearman_metric_orders_methods() {
        let r = spread_risks(15);
        let good: Vec<f64> = r.iter().map(|x| 1.0 - x).collect();
        let methods = vec![
            MethodRecords { name: "good".into(), folds: vec![fold(r.clone(), good)] },
            MethodRecords { name: "bad".into(), folds: vec![fold(r.clone(), r.clone())] },
        ];
        let d = bootstrap_ranking(&methods, 40, 9, RankingMetric::Spearman).unwrap();
        assert_eq!(d.median_rank, vec![1.0, 2.0]);
    }

    #[test]
    fn misaligned_inputs() {
        let a = MethodRecords { name: "a".into(), folds: vec![fold(vec![0.1, 0.2], vec![1.0, 2.0])] };
        let mut b = a.clone();
        b.folds[0].case_ids[1] = "other".into();
        assert_eq!(bootstrap_ranking(&[a.clone(), b], 5, 0, RankingMetric::Aurc).unwrap_err().code(), "MISALIGNED_CASES");
        let empty = MethodRecords { name: "e".into(), folds: vec![fold(vec![], vec![])] };
        assert_eq!(bootstrap_ranking(&[empty], 5, 0, RankingMetric::Aurc).unwrap_err().code(), "EMPTY_FOLD");
    }

    #[test]
    fn method_order_permutes_outputs() {
        let r = spread_risks(12);
        let mk = |name: &str, c: Vec<f64>| MethodRecords { name: name.into(), folds: vec![fold(r.clone(), c)] };
        let a = mk("a", (0..12).map(|i| ((i * 7) % 12) as f64).collect());
        let b = mk("b", (0..12).map(|i| -(i as f64)).collect());
        let c = mk("c", (0..12).map(|i| ((i * 5) % 12) as f64).collect());
        let d1 = bootstrap_ranking(&[a.clone(), b.clone(), c.clone()], 60, 4, RankingMetric::Aurc).unwrap();
        let d2 = bootstrap_ranking(&[c, a, b], 60, 4, RankingMetric::Aurc).unwrap();
        assert_eq!(d1.rank_counts[0], d2.rank_counts[1]);
        assert_eq!(d1.rank_counts[1], d2.rank_counts[2]);
        assert_eq!(d1.rank_counts[2], d2.rank_counts[0]);
    }
}
