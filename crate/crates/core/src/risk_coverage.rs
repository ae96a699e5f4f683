//! Risk-coverage curves and the AURC family.
//!
//! Cases sharing a confidence value cannot be separated by any threshold, so
//! they are admitted together as one tie group and the curve has one working
//! point per distinct confidence. The area uses the right value of each group
//! (a coverage-weighted rectangle rule); without ties it equals the average
//! over k of the mean risk of the top-k cases.
//!
//! Within a tie group, and for [`aurc_random`], risks are summed in ascending
//! order so that results do not depend on input order and the all-tied curve
//! reproduces the random baseline bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub coverage: f64,
    pub selective_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCoverageCurve {
    points: Vec<CurvePoint>,
    group_sizes: Vec<usize>,
    total_n: usize,
}

impl RiskCoverageCurve {
    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn total_n(&self) -> usize {
        self.total_n
    }

    /// `coverage,selective_risk` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("coverage,selective_risk\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.coverage, p.selective_risk));
        }
        out
    }
}

fn check_risks(risks: &[f64]) -> Result<()> {
    if risks.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (index, &value) in risks.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::RiskOutOfRange { index, value });
        }
    }
    Ok(())
}

pub fn rc_curve(risks: &[f64], confidences: &[f64]) -> Result<RiskCoverageCurve> {
    if risks.len() != confidences.len() {
        return Err(Error::LengthMismatch {
            left: risks.len(),
            right: confidences.len(),
        });
    }
    check_risks(risks)?;
    if confidences.iter().any(|c| c.is_nan()) {
        return Err(Error::NonFiniteInput("confidences"));
    }
    let n = risks.len();
    let mut order: Vec<usize> = (0..n).collect();
    // + 0.0 folds -0.0 into 0.0 so the sort agrees with the == grouping below
    order.sort_by(|&a, &b| {
        (confidences[b] + 0.0)
            .total_cmp(&(confidences[a] + 0.0))
            .then(risks[a].total_cmp(&risks[b]))
    });

    let mut points = Vec::new();
    let mut group_sizes = Vec::new();
    let mut admitted = 0usize;
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut start = 0;
    while start < n {
        let c = confidences[order[start]];
        let mut end = start;
        while end < n && confidences[order[end]] == c {
            let r = risks[order[end]];
            sum += r;
            lo = lo.min(r);
            hi = hi.max(r);
            end += 1;
        }
        admitted += end - start;
        group_sizes.push(end - start);
        points.push(CurvePoint {
            coverage: admitted as f64 / n as f64,
            selective_risk: (sum / admitted as f64).clamp(lo, hi),
        });
        start = end;
    }
    Ok(RiskCoverageCurve {
        points,
        group_sizes,
        total_n: n,
    })
}

/// Coverage-weighted sum of selective risks.
pub fn aurc(curve: &RiskCoverageCurve) -> f64 {
    let n = curve.total_n as f64;
    curve
        .points
        .iter()
        .zip(&curve.group_sizes)
        .map(|(p, &g)| p.selective_risk * (g as f64 / n))
        .sum()
}

/// AURC of a confidence function carrying no information: the mean risk.
pub fn aurc_random(risks: &[f64]) -> Result<f64> {
    check_risks(risks)?;
    let mut sorted = risks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sum: f64 = sorted.iter().sum();
    Ok((sum / sorted.len() as f64).clamp(sorted[0], sorted[sorted.len() - 1]))
}

/// AURC when cases are admitted in ascending order of risk.
pub fn aurc_optimal(risks: &[f64]) -> Result<f64> {
    let conf: Vec<f64> = risks.iter().map(|r| -r).collect();
    Ok(aurc(&rc_curve(risks, &conf)?))
}

/// `(aurc − opt) / (rand − opt)`: 0 is optimal, 1 is random.
pub fn naurc(aurc_value: f64, rand_value: f64, opt_value: f64) -> Result<f64> {
    let span = rand_value - opt_value;
    if span == 0.0 {
        return Err(Error::NormalizationDegenerate(rand_value));
    }
    Ok((aurc_value - opt_value) / span)
}

/// Largest recorded coverage whose selective risk is at most
/// `max_selective_risk`, or 0 if none qualifies.
pub fn operating_point(curve: &RiskCoverageCurve, max_selective_risk: f64) -> f64 {
    curve
        .points
        .iter()
        .filter(|p| p.selective_risk <= max_selective_risk)
        .map(|p| p.coverage)
        .fold(0.0, f64::max)
}
