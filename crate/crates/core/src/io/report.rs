//! Evaluation reports and their on-disk form.
//!
//! `emit_report` writes into the output directory:
//!
//! - `report.json`: the full [`EvalReport`]
//! - `summary.csv`: one row per (confidence, risk) with the columns of [`SUMMARY_HEADER`]
//! - `curves/<confidence>__<risk>.csv`: risk-coverage points, header `coverage,selective_risk`
//! - `ranking.csv` and `ranking.json` when bootstrap ranking was configured
//!
//! Undefined statistics (for example Spearman on constant confidences) are
//! `null` in JSON and empty in CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Config;
use super::csv_field;
use crate::datamodel::{CaseRecord, RiskMetric};
use crate::error::{Error, Result};
use crate::risk_coverage::{aurc, aurc_optimal, aurc_random, naurc, rc_curve, RiskCoverageCurve};
use crate::stats::{
    f_auroc, mae, ood_auroc, pearson, spearman, FoldRecords, MethodRecords, RankDistribution,
};

pub const SUMMARY_HEADER: &str = "confidence,risk,n_cases,aurc,naurc,aurc_random,aurc_optimal,spearman,pearson,f_auroc,ood_auroc,mae";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub confidence: String,
    pub risk: String,
    pub n_cases: usize,
    pub aurc: f64,
    pub naurc: Option<f64>,
    pub aurc_random: f64,
    pub aurc_optimal: f64,
    /// Rank correlation of confidence with the metric `1 - risk`.
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
    pub f_auroc: Option<f64>,
    pub ood_auroc: Option<f64>,
    /// Mean absolute error of the confidence as an estimate of `1 - risk`.
    pub mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRef {
    pub confidence: String,
    pub risk: String,
    pub file: String,
}

/// One failure that did not abort the run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub fold: Option<usize>,
    pub case_id: Option<String>,
    /// Method or confidence name, `risk:<name>` for risks, `case` for whole cases.
    pub scope: String,
    pub code: String,
    pub message: String,
}

impl LedgerEntry {
    pub fn new(fold: Option<usize>, case_id: Option<&str>, scope: impl Into<String>, error: &Error) -> Self {
        Self {
            fold,
            case_id: case_id.map(str::to_string),
            scope: scope.into(),
            code: error.code().to_string(),
            message: error.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub risk: String,
    pub distribution: RankDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tool: String,
    pub version: String,
    pub config: Config,
    /// Sorted by (fold, case_id).
    pub cases: Vec<CaseRecord>,
    pub summary: Vec<MethodSummary>,
    pub curves: Vec<CurveRef>,
    pub ranking: Option<RankingResult>,
    pub errors: Vec<LedgerEntry>,
}

impl EvalReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

fn defined(r: Result<f64>) -> Option<f64> {
    r.ok().filter(|v| v.is_finite())
}

/// Aligned (risk, confidence, is_ood) columns over cases carrying both values.
pub fn columns(cases: &[CaseRecord], confidence: &str, risk: &str) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let mut r = Vec::new();
    let mut c = Vec::new();
    let mut ood = Vec::new();
    for case in cases {
        if let (Some(rv), Some(cv)) = (case.risk(risk), case.confidence(confidence)) {
            r.push(rv);
            c.push(cv);
            ood.push(case.is_ood());
        }
    }
    (r, c, ood)
}

/// Summary and curve of one (confidence, risk) pair; `None` without cases.
pub fn summarize_pair(
    cases: &[CaseRecord],
    confidence: &str,
    risk: &str,
    failure_threshold: f64,
    with_mae: bool,
) -> Result<Option<(MethodSummary, RiskCoverageCurve)>> {
    let (r, c, ood) = columns(cases, confidence, risk);
    if r.is_empty() {
        return Ok(None);
    }
    let curve = rc_curve(&r, &c)?;
    let value = aurc(&curve);
    let random = aurc_random(&r)?;
    let optimal = aurc_optimal(&r)?;
    let metric: Vec<f64> = r.iter().map(|x| 1.0 - x).collect();
    let summary = MethodSummary {
        confidence: confidence.to_string(),
        risk: risk.to_string(),
        n_cases: r.len(),
        aurc: value,
        naurc: defined(naurc(value, random, optimal)),
        aurc_random: random,
        aurc_optimal: optimal,
        spearman: defined(spearman(&c, &metric)),
        pearson: defined(pearson(&c, &metric)),
        f_auroc: defined(f_auroc(&r, &c, failure_threshold)),
        ood_auroc: defined(ood_auroc(&ood, &c)),
        mae: if with_mae { defined(mae(&c, &metric)) } else { None },
    };
    Ok(Some((summary, curve)))
}

/// Summaries and curves for every confidence column and configured risk.
pub fn summarize(
    cases: &[CaseRecord],
    config: &Config,
) -> Result<Vec<(MethodSummary, RiskCoverageCurve)>> {
    let mut out = Vec::new();
    for column in config.confidence_columns() {
        for (risk, spec) in &config.risks {
            let with_mae = column.method.estimates_dsc()
                && matches!(spec.metric, RiskMetric::Dsc | RiskMetric::GeneralizedDsc);
            if let Some(pair) =
                summarize_pair(cases, &column.name, risk, config.failure_threshold, with_mae)?
            {
                out.push(pair);
            }
        }
    }
    Ok(out)
}

/// Per-method fold records over the cases every source has a value for.
pub fn ranking_inputs(sources: &[(String, &[CaseRecord], String)], risk: &str) -> Vec<MethodRecords> {
    // (fold, case_id) -> per-source (risk, confidence)
    let mut table: BTreeMap<(usize, String), Vec<Option<(f64, f64)>>> = BTreeMap::new();
    for (s, (_, cases, confidence)) in sources.iter().enumerate() {
        for case in cases.iter() {
            if let (Some(r), Some(c)) = (case.risk(risk), case.confidence(confidence)) {
                let row = table
                    .entry((case.fold(), case.case_id().to_string()))
                    .or_insert_with(|| vec![None; sources.len()]);
                row[s] = Some((r, c));
            }
        }
    }
    let complete: Vec<(&(usize, String), Vec<(f64, f64)>)> = table
        .iter()
        .filter_map(|(k, row)| row.iter().copied().collect::<Option<Vec<_>>>().map(|v| (k, v)))
        .collect();
    let mut folds: Vec<usize> = complete.iter().map(|((f, _), _)| *f).collect();
    folds.dedup();

    sources
        .iter()
        .enumerate()
        .map(|(s, (name, _, _))| MethodRecords {
            name: name.clone(),
            folds: folds
                .iter()
                .map(|&fold| {
                    let rows: Vec<_> = complete.iter().filter(|((f, _), _)| *f == fold).collect();
                    FoldRecords {
                        case_ids: rows.iter().map(|((_, id), _)| id.clone()).collect(),
                        risks: rows.iter().map(|(_, v)| v[s].0).collect(),
                        confidences: rows.iter().map(|(_, v)| v[s].1).collect(),
                    }
                })
                .collect(),
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(summary: &[MethodSummary]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&s.confidence),
            csv_field(&s.risk),
            s.n_cases,
            s.aurc,
            opt(s.naurc),
            s.aurc_random,
            s.aurc_optimal,
            opt(s.spearman),
            opt(s.pearson),
            opt(s.f_auroc),
            opt(s.ood_auroc),
            opt(s.mae),
        ));
    }
    out
}

pub fn curve_file_name(confidence: &str, risk: &str) -> String {
    format!("curves/{confidence}__{risk}.csv")
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_ranking(ranking: &RankDistribution, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut json = serde_json::to_string_pretty(ranking).expect("ranking serialises");
    json.push('\n');
    write(&out_dir.join("ranking.json"), &json)?;
    write(&out_dir.join("ranking.csv"), &ranking.to_csv())
}

/// Writes every report artifact; curves are recomputed from the case records.
pub fn emit_report(report: &EvalReport, out_dir: &Path) -> Result<()> {
    let curves_dir = out_dir.join("curves");
    fs::create_dir_all(&curves_dir).map_err(|e| Error::io(&curves_dir, e))?;
    write(&out_dir.join("report.json"), &report.to_json())?;
    write(&out_dir.join("summary.csv"), &summary_csv(&report.summary))?;
    for c in &report.curves {
        let (r, conf, _) = columns(&report.cases, &c.confidence, &c.risk);
        let curve = rc_curve(&r, &conf)?;
        write(&out_dir.join(&c.file), &curve.to_csv())?;
    }
    if let Some(ranking) = &report.ranking {
        write_ranking(&ranking.distribution, out_dir)?;
    }
    Ok(())
}
