//! End-to-end evaluation: manifest and config in, [`EvalReport`] out.
//!
//! Cases run in parallel on a bounded pool. A failure inside one case only
//! removes the affected risk or confidence from that case and is recorded in
//! the report's error ledger. Everything reduced into the report is ordered by
//! `(fold, case_id)`, so the output does not depend on scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::aggregation::{agg_mean, agg_mean_foreground, agg_non_boundary, agg_patch_min, simple_features};
use crate::datamodel::{CaseRecord, ConfidenceMap, LabelMap, RiskSpec};
use crate::error::{Error, Result};
use crate::io::config::{Config, MethodConfig};
use crate::io::manifest::{read_manifest, Manifest, ManifestRow};
use crate::io::report::{curve_file_name, ranking_inputs, summarize, CurveRef, EvalReport, LedgerEntry, RankingResult};
use crate::io::volume::{read_confidence_map, read_feature_vector, read_label_map};
use crate::learners::{
    mahalanobis_confidence, mahalanobis_fit, rf_confidence, rf_fit, ForestModel, ForestParams,
    GaussianModel, GENERALIZED_DSC_TARGET,
};
use crate::pairwise::pairwise_dsc;
use crate::segmetrics::{compute_risk, generalized_dsc, per_class_dsc};
use crate::stats::bootstrap_ranking;

pub const TOOL_NAME: &str = "segfd";

/// Features and DSC targets of one training case for the regression forest.
pub struct ForestTrainingRow {
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
}

fn missing(field: &'static str) -> Error {
    Error::invalid(field, "not set for this case")
}

fn load_pair(row: &ManifestRow) -> Result<(LabelMap, LabelMap)> {
    let gt = read_label_map(&row.gt_path, &row.meta)?;
    let pred = read_label_map(&row.pred_path, &row.meta)?;
    Ok((pred, gt))
}

fn load_conf(row: &ManifestRow) -> Result<ConfidenceMap> {
    let path = row.conf_path.as_ref().ok_or_else(|| missing("conf_path"))?;
    read_confidence_map(path, &row.meta)
}

/// Target names for a class list: `dsc_<id>` per class, then `generalized_dsc`.
pub fn forest_target_schema(class_ids: &[u32]) -> Vec<String> {
    class_ids
        .iter()
        .map(|id| format!("dsc_{id}"))
        .chain([GENERALIZED_DSC_TARGET.to_string()])
        .collect()
}

pub fn forest_training_row(row: &ManifestRow, width: usize) -> Result<ForestTrainingRow> {
    let (pred, gt) = load_pair(row)?;
    let conf = load_conf(row)?;
    let features = simple_features(&conf, &pred, width)?.values().to_vec();
    let mut targets = per_class_dsc(&pred, &gt)?;
    targets.push(generalized_dsc(&pred, &gt)?);
    Ok(ForestTrainingRow { features, targets })
}

/// Fits the simple-feature regression forest on every row of a training manifest.
pub fn fit_forest_from_manifest(manifest: &Manifest, width: usize, params: &ForestParams) -> Result<ForestModel> {
    let class_ids = manifest
        .rows
        .first()
        .map(|r| r.meta.class_ids.clone())
        .ok_or(Error::EmptyInput)?;
    let rows = manifest
        .rows
        .par_iter()
        .map(|r| forest_training_row(r, width))
        .collect::<Result<Vec<_>>>()?;
    let (features, targets): (Vec<_>, Vec<_>) =
        rows.into_iter().map(|r| (r.features, r.targets)).unzip();
    rf_fit(
        &features,
        &targets,
        crate::aggregation::SIMPLE_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        forest_target_schema(&class_ids),
        params,
    )
}

/// Fits the Gaussian on the `feature_path` vectors of a training manifest.
pub fn fit_gaussian_from_manifest(manifest: &Manifest, ridge_epsilon: f64) -> Result<GaussianModel> {
    let rows = manifest
        .rows
        .iter()
        .map(|r| read_feature_vector(r.feature_path.as_ref().ok_or_else(|| missing("feature_path"))?))
        .collect::<Result<Vec<_>>>()?;
    mahalanobis_fit(&rows, ridge_epsilon)
}

pub fn load_json_model<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_json_model<T: serde::Serialize>(model: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(model).expect("model serialises");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

enum Prepared {
    None,
    Gaussian(GaussianModel),
    Forest(ForestModel),
    Failed,
}

fn prepare(method: &MethodConfig, base: &Path, seed: u64) -> Result<Prepared> {
    match method {
        MethodConfig::Mahalanobis { model: Some(p), .. } => Ok(Prepared::Gaussian(load_json_model(&base.join(p))?)),
        MethodConfig::Mahalanobis { train_manifest: Some(p), ridge_epsilon, .. } => Ok(Prepared::Gaussian(
            fit_gaussian_from_manifest(&read_manifest(&base.join(p))?, *ridge_epsilon)?,
        )),
        MethodConfig::RfSimple { model: Some(p), .. } => Ok(Prepared::Forest(load_json_model(&base.join(p))?)),
        MethodConfig::RfSimple {
            train_manifest: Some(p),
            width,
            n_trees,
            min_samples_split,
            bootstrap,
            ..
        } => {
            let params = ForestParams {
                n_trees: *n_trees,
                bootstrap: *bootstrap,
                min_samples_split: *min_samples_split,
                seed,
            };
            Ok(Prepared::Forest(fit_forest_from_manifest(&read_manifest(&base.join(p))?, *width, &params)?))
        }
        _ => Ok(Prepared::None),
    }
}

struct CaseOutcome {
    record: Option<CaseRecord>,
    errors: Vec<LedgerEntry>,
}

fn per_class_specs(name: &str, spec: &RiskSpec, class_ids: &[u32]) -> Vec<(String, RiskSpec)> {
    let classes = spec.class_subset.clone().unwrap_or_else(|| class_ids.to_vec());
    classes
        .into_iter()
        .map(|id| {
            let mut s = spec.clone();
            s.class_subset = Some(vec![id]);
            (format!("{name}_class{id}"), s)
        })
        .collect()
}

fn evaluate_case(row: &ManifestRow, config: &Config, models: &[Prepared]) -> CaseOutcome {
    let errors = std::cell::RefCell::new(Vec::new());
    let log = |scope: &str, e: &Error| {
        errors
            .borrow_mut()
            .push(LedgerEntry::new(Some(row.fold), Some(&row.case_id), scope, e))
    };
    let log_entry = |entry: LedgerEntry| errors.borrow_mut().push(entry);
    let (pred, gt) = match load_pair(row) {
        Ok(p) => p,
        Err(e) => {
            log("case", &e);
            return CaseOutcome { record: None, errors: errors.into_inner() };
        }
    };

    let mut risks = BTreeMap::new();
    for (name, spec) in &config.risks {
        match compute_risk(&pred, &gt, spec) {
            Ok(r) => {
                risks.insert(name.clone(), r);
            }
            Err(e) => log(&format!("risk:{name}"), &e),
        }
        if config.per_class_risks {
            for (class_name, class_spec) in per_class_specs(name, spec, &row.meta.class_ids) {
                match compute_risk(&pred, &gt, &class_spec) {
                    Ok(r) => {
                        risks.insert(class_name, r);
                    }
                    Err(e) => log(&format!("risk:{class_name}"), &e),
                }
            }
        }
    }

    let needs_conf = config.methods.iter().any(|m| {
        matches!(
            m,
            MethodConfig::Mean { .. }
                | MethodConfig::NonBoundary { .. }
                | MethodConfig::MeanForeground { .. }
                | MethodConfig::PatchMin { .. }
                | MethodConfig::RfSimple { .. }
        )
    });
    let conf = if needs_conf { Some(load_conf(row)) } else { None };
    let conf_failure = match &conf {
        Some(Err(e)) => Some(LedgerEntry::new(Some(row.fold), Some(&row.case_id), "", e)),
        _ => None,
    };
    let conf_ref = || -> Result<&ConfidenceMap> {
        match conf.as_ref() {
            Some(Ok(c)) => Ok(c),
            _ => Err(missing("conf_path")),
        }
    };

    let mut confidences = BTreeMap::new();
    for (method, model) in config.methods.iter().zip(models) {
        if let MethodConfig::Oracle { .. } = method {
            for risk in config.risks.keys() {
                let name = format!("{}_{risk}", method.name());
                match risks.get(risk) {
                    Some(r) => {
                        confidences.insert(name, -r);
                    }
                    None => log(&name, &Error::invalid("risk", format!("`{risk}` unavailable"))),
                }
            }
            continue;
        }
        let uses_conf = !matches!(
            method,
            MethodConfig::PairwiseDsc { .. } | MethodConfig::Mahalanobis { .. }
        );
        if let (true, Some(entry)) = (uses_conf, &conf_failure) {
            log_entry(LedgerEntry {
                scope: method.name().to_string(),
                ..entry.clone()
            });
            continue;
        }
        let value = match (method, model) {
            (_, Prepared::Failed) => continue,
            (MethodConfig::Mean { .. }, _) => conf_ref().and_then(agg_mean),
            (MethodConfig::NonBoundary { width, .. }, _) => {
                conf_ref().and_then(|c| agg_non_boundary(c, &pred, *width))
            }
            (MethodConfig::MeanForeground { width, .. }, _) => {
                conf_ref().and_then(|c| agg_mean_foreground(c, &pred, *width))
            }
            (MethodConfig::PatchMin { patch_size, .. }, _) => {
                conf_ref().and_then(|c| agg_patch_min(c, *patch_size))
            }
            (MethodConfig::PairwiseDsc { .. }, _) => row
                .sample_paths
                .iter()
                .map(|p| read_label_map(p, &row.meta))
                .collect::<Result<Vec<_>>>()
                .and_then(|s| pairwise_dsc(&s)),
            (MethodConfig::Mahalanobis { .. }, Prepared::Gaussian(g)) => row
                .feature_path
                .as_ref()
                .ok_or_else(|| missing("feature_path"))
                .and_then(|p| read_feature_vector(p))
                .and_then(|x| mahalanobis_confidence(g, &x)),
            (MethodConfig::RfSimple { width, .. }, Prepared::Forest(f)) => conf_ref()
                .and_then(|c| simple_features(c, &pred, *width))
                .and_then(|x| rf_confidence(f, &x)),
            _ => unreachable!("models are prepared per method kind"),
        };
        match value {
            Ok(v) => {
                confidences.insert(method.name().to_string(), v);
            }
            Err(e) => log(method.name(), &e),
        }
    }

    if risks.is_empty() {
        return CaseOutcome { record: None, errors: errors.into_inner() };
    }
    match CaseRecord::new(
        row.case_id.clone(),
        row.fold,
        row.domain.clone(),
        row.is_ood,
        risks,
        confidences,
    ) {
        Ok(record) => CaseOutcome {
            record: Some(record),
            errors: errors.into_inner(),
        },
        Err(e) => {
            log("case", &e);
            CaseOutcome {
                record: None,
                errors: errors.into_inner(),
            }
        }
    }
}

/// Runs the full evaluation. `base` is the directory model and training
/// manifest paths in `config` resolve against.
pub fn run_evaluate(manifest: &Manifest, config: &Config, base: &Path) -> Result<EvalReport> {
    config.validate()?;
    let mut errors = Vec::new();
    let models: Vec<Prepared> = config
        .methods
        .iter()
        .map(|m| match prepare(m, base, config.seed) {
            Ok(p) => p,
            Err(e) => {
                errors.push(LedgerEntry::new(None, None, m.name(), &e));
                Prepared::Failed
            }
        })
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<CaseOutcome> = pool.install(|| {
        manifest
            .rows
            .par_iter()
            .map(|row| evaluate_case(row, config, &models))
            .collect()
    });

    let mut cases = Vec::new();
    for o in outcomes {
        cases.extend(o.record);
        errors.extend(o.errors);
    }
    cases.sort_by(|a, b| (a.fold(), a.case_id()).cmp(&(b.fold(), b.case_id())));
    errors.sort();

    let pairs = summarize(&cases, config)?;
    let curves = pairs
        .iter()
        .map(|(s, _)| CurveRef {
            confidence: s.confidence.clone(),
            risk: s.risk.clone(),
            file: curve_file_name(&s.confidence, &s.risk),
        })
        .collect();
    let summary = pairs.into_iter().map(|(s, _)| s).collect();

    let ranking = match (&config.bootstrap, config.ranking_risk()) {
        (Some(b), Some(risk)) => {
            let columns = config.confidence_columns();
            let sources: Vec<(String, &[CaseRecord], String)> = columns
                .iter()
                .map(|c| (c.name.clone(), cases.as_slice(), c.name.clone()))
                .collect();
            let inputs = ranking_inputs(&sources, risk);
            match bootstrap_ranking(&inputs, b.n_bootstrap, config.seed, b.metric) {
                Ok(distribution) => Some(RankingResult {
                    risk: risk.to_string(),
                    distribution,
                }),
                Err(e) => {
                    errors.push(LedgerEntry::new(None, None, "ranking", &e));
                    None
                }
            }
        }
        _ => None,
    };

    Ok(EvalReport {
        tool: TOOL_NAME.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        cases,
        summary,
        curves,
        ranking,
        errors,
    })
}
