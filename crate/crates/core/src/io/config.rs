//! Evaluation run configuration (JSON, unknown keys rejected).
//!
//! ```json
//! {
//!   "risks": {
//!     "dsc": { "metric": "dsc" },
//!     "nsd": { "metric": "nsd", "nsd_tolerance": 2.0, "nsd_class_tolerances": { "2": 1.0 } }
//!   },
//!   "methods": [
//!     { "kind": "mean" },
//!     { "kind": "non_boundary", "width": 4 },
//!     { "kind": "mean_foreground", "width": 4 },
//!     { "kind": "patch_min", "patch_size": 10 },
//!     { "kind": "pairwise_dsc" },
//!     { "kind": "mahalanobis", "train_manifest": "train.csv" },
//!     { "kind": "rf_simple", "name": "rf", "model": "rf.json" },
//!     { "kind": "oracle" }
//!   ],
//!   "failure_threshold": 0.5,
//!   "bootstrap": { "n_bootstrap": 500, "metric": "aurc", "risk": "dsc" },
//!   "seed": 0,
//!   "strict": false,
//!   "per_class_risks": false,
//!   "workers": 4
//! }
//! ```
//!
//! Only `risks` is required. Every method has an optional `name` that
//! defaults to its `kind`. The `oracle` method emits one confidence per risk,
//! named `<name>_<risk>`, equal to the negated risk. `model` and
//! `train_manifest` paths resolve against the configuration file's directory.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::{DEFAULT_BOUNDARY_WIDTH, DEFAULT_PATCH_SIZE};
use crate::datamodel::RiskSpec;
use crate::error::{Error, Result};
use crate::learners::DEFAULT_RIDGE_EPSILON;
use crate::stats::{RankingMetric, DEFAULT_N_BOOTSTRAP};

fn default_width() -> usize {
    DEFAULT_BOUNDARY_WIDTH
}

fn default_patch() -> usize {
    DEFAULT_PATCH_SIZE
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE_EPSILON
}

fn default_trees() -> usize {
    100
}

fn default_min_split() -> usize {
    2
}

fn default_true() -> bool {
    true
}

fn default_threshold() -> f64 {
    0.5
}

fn default_n_bootstrap() -> usize {
    DEFAULT_N_BOOTSTRAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Mean {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    NonBoundary {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default = "default_width")]
        width: usize,
    },
    MeanForeground {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default = "default_width")]
        width: usize,
    },
    PatchMin {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default = "default_patch")]
        patch_size: usize,
    },
    PairwiseDsc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    Mahalanobis {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        train_manifest: Option<PathBuf>,
        #[serde(default = "default_ridge")]
        ridge_epsilon: f64,
    },
    RfSimple {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        train_manifest: Option<PathBuf>,
        #[serde(default = "default_width")]
        width: usize,
        #[serde(default = "default_trees")]
        n_trees: usize,
        #[serde(default = "default_min_split")]
        min_samples_split: usize,
        #[serde(default = "default_true")]
        bootstrap: bool,
    },
    Oracle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl MethodConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            MethodConfig::Mean { .. } => "mean",
            MethodConfig::NonBoundary { .. } => "non_boundary",
            MethodConfig::MeanForeground { .. } => "mean_foreground",
            MethodConfig::PatchMin { .. } => "patch_min",
            MethodConfig::PairwiseDsc { .. } => "pairwise_dsc",
            MethodConfig::Mahalanobis { .. } => "mahalanobis",
            MethodConfig::RfSimple { .. } => "rf_simple",
            MethodConfig::Oracle { .. } => "oracle",
        }
    }

    pub fn name(&self) -> &str {
        let name = match self {
            MethodConfig::Mean { name }
            | MethodConfig::NonBoundary { name, .. }
            | MethodConfig::MeanForeground { name, .. }
            | MethodConfig::PatchMin { name, .. }
            | MethodConfig::PairwiseDsc { name }
            | MethodConfig::Mahalanobis { name, .. }
            | MethodConfig::RfSimple { name, .. }
            | MethodConfig::Oracle { name } => name,
        };
        name.as_deref().unwrap_or(self.kind())
    }

    /// Whether the confidence estimates a DSC value, so MAE against it is meaningful.
    pub fn estimates_dsc(&self) -> bool {
        matches!(self, MethodConfig::PairwiseDsc { .. } | MethodConfig::RfSimple { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_n_bootstrap")]
    pub n_bootstrap: usize,
    #[serde(default)]
    pub metric: RankingMetric,
    /// Risk to rank on; the first risk by name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub risks: BTreeMap<String, RiskSpec>,
    #[serde(default)]
    pub methods: Vec<MethodConfig>,
    #[serde(default = "default_threshold")]
    pub failure_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub per_class_risks: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// One confidence column of the report and the method producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceColumn<'a> {
    pub name: String,
    pub method: &'a MethodConfig,
    /// Set for oracle columns.
    pub risk: Option<&'a str>,
}

fn check_name(what: &str, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.contains("__")
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} name `{name}` must be non-empty, use only [A-Za-z0-9_.-], not start with '.' and not contain \"__\""
        )))
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Config =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Parses the file and returns the directory relative paths resolve against.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((config, base))
    }

    pub fn validate(&self) -> Result<()> {
        if self.risks.is_empty() {
            return Err(Error::Config("at least one risk is required".into()));
        }
        for (name, spec) in &self.risks {
            check_name("risk", name)?;
            spec.validate()
                .map_err(|e| Error::Config(format!("risk `{name}`: {e}")))?;
        }
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return Err(Error::Config(format!(
                "failure_threshold {} outside [0, 1]",
                self.failure_threshold
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        for m in &self.methods {
            check_name("method", m.name())?;
            match m {
                MethodConfig::NonBoundary { width, .. }
                | MethodConfig::MeanForeground { width, .. }
                | MethodConfig::RfSimple { width, .. }
                    if *width == 0 =>
                {
                    return Err(Error::Config(format!("method `{}`: width must be >= 1", m.name())))
                }
                MethodConfig::PatchMin { patch_size: 0, .. } => {
                    return Err(Error::Config(format!(
                        "method `{}`: patch_size must be >= 1",
                        m.name()
                    )))
                }
                MethodConfig::Mahalanobis { model, train_manifest, .. }
                | MethodConfig::RfSimple { model, train_manifest, .. }
                    if model.is_some() == train_manifest.is_some() =>
                {
                    return Err(Error::Config(format!(
                        "method `{}`: set exactly one of `model` and `train_manifest`",
                        m.name()
                    )))
                }
                _ => {}
            }
        }
        let mut seen = HashSet::new();
        for column in self.confidence_columns() {
            if !seen.insert(column.name.clone()) {
                return Err(Error::Config(format!(
                    "confidence name `{}` is produced twice",
                    column.name
                )));
            }
        }
        if let Some(b) = &self.bootstrap {
            if b.n_bootstrap == 0 {
                return Err(Error::Config("bootstrap.n_bootstrap must be >= 1".into()));
            }
            if let Some(r) = &b.risk {
                if !self.risks.contains_key(r) {
                    return Err(Error::Config(format!("bootstrap.risk `{r}` is not a configured risk")));
                }
            }
        }
        Ok(())
    }

    /// Confidence columns in method order; oracles expand per risk.
    pub fn confidence_columns(&self) -> Vec<ConfidenceColumn<'_>> {
        let mut out = Vec::new();
        for m in &self.methods {
            if let MethodConfig::Oracle { .. } = m {
                for risk in self.risks.keys() {
                    out.push(ConfidenceColumn {
                        name: format!("{}_{risk}", m.name()),
                        method: m,
                        risk: Some(risk),
                    });
                }
            } else {
                out.push(ConfidenceColumn {
                    name: m.name().to_string(),
                    method: m,
                    risk: None,
                });
            }
        }
        out
    }

    pub fn ranking_risk(&self) -> Option<&str> {
        let b = self.bootstrap.as_ref()?;
        b.risk
            .as_deref()
            .or_else(|| self.risks.keys().next().map(String::as_str))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_and_defaults() {
        let c = Config::from_json(r#"{"risks": {"dsc": {"metric": "dsc"}}}"#).unwrap();
        assert!(c.methods.is_empty());
        assert_eq!(c.failure_threshold, 0.5);
        assert!(!c.strict);
        let c = Config::from_json(
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "methods": [{"kind": "non_boundary"}, {"kind": "patch_min", "name": "pm"}]}"#,
        )
        .unwrap();
        assert_eq!(c.methods[0], MethodConfig::NonBoundary { name: None, width: 4 });
        assert_eq!(c.methods[1].name(), "pm");
    }

    #[test]
    fn unknown_keys_rejected() {
        for bad in [
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "sead": 1}"#,
            r#"{"risks": {"dsc": {"metric": "dsc", "tolerance": 1}}}"#,
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "methods": [{"kind": "mean", "width": 3}]}"#,
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "methods": [{"kind": "median"}]}"#,
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "bootstrap": {"draws": 3}}"#,
        ] {
            assert_eq!(Config::from_json(bad).unwrap_err().code(), "CONFIG", "{bad}");
        }
    }

    #[test]
    fn semantic_validation() {
        for bad in [
            r#"{"risks": {}}"#,
            r#"{"risks": {"n": {"metric": "nsd"}}}"#,
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "methods": [{"kind": "mean"}, {"kind": "mean"}]}"#,
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "methods": [{"kind": "rf_simple"}]}"#,
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "methods": [{"kind": "patch_min", "patch_size": 0}]}"#,
            r#"{"risks": {"a/b": {"metric": "dsc"}}}"#,
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "bootstrap": {"risk": "nsd"}}"#,
            r#"{"risks": {"dsc": {"metric": "dsc"}}, "failure_threshold": 2}"#,
        ] {
            assert_eq!(Config::from_json(bad).unwrap_err().code(), "CONFIG", "{bad}");
        }
    }

    #[test]
    fn oracle_expands_per_risk_and_echo_round_trips() {
        let text = r#"{"risks": {"dsc": {"metric": "dsc"}, "nsd": {"metric": "nsd", "nsd_tolerance": 1.0}},
                       "methods": [{"kind": "mean"}, {"kind": "oracle"}], "bootstrap": {}}"#;
        let c = Config::from_json(text).unwrap();
        let names: Vec<String> = c.confidence_columns().into_iter().map(|c| c.name).collect();
        assert_eq!(names, ["mean", "oracle_dsc", "oracle_nsd"]);
        assert_eq!(c.ranking_risk(), Some("dsc"));
        let echo = serde_json::to_string(&c).unwrap();
        assert_eq!(Config::from_json(&echo).unwrap(), c);
    }
}
