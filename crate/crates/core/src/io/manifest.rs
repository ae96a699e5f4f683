//! Case manifests.
//!
//! A manifest is a CSV file (comma separated, RFC 4180 quoting) with this
//! header; column order is free and unknown columns are ignored:
//!
//! | column         | required | content                                         |
//! |----------------|----------|-------------------------------------------------|
//! | `case_id`      | yes      | identifier, unique within a fold                |
//! | `fold`         | yes      | non-negative integer                            |
//! | `domain`       | yes      | free text, e.g. scanner or site                 |
//! | `is_ood`       | yes      | `true`/`false` or `1`/`0`                       |
//! | `gt_path`      | yes      | ground truth label volume                       |
//! | `pred_path`    | yes      | predicted label volume                          |
//! | `conf_path`    | no       | confidence or probability volume                |
//! | `sample_paths` | no       | `;`-separated label volumes of ensemble members |
//! | `feature_path` | no       | 1-D feature vector                              |
//! | `spacing`      | yes      | `;`-separated voxel spacing, `(z;)y;x`          |
//! | `label_mode`   | yes      | `exclusive` or `regions`                        |
//! | `class_ids`    | yes      | `;`-separated foreground class ids              |
//!
//! Relative paths resolve against the manifest's directory. Rows are numbered
//! from 1, the header excluded.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::datamodel::LabelMode;
use crate::error::{Error, Result};

use super::volume::VolumeMeta;

pub const REQUIRED_COLUMNS: [&str; 9] = [
    "case_id",
    "fold",
    "domain",
    "is_ood",
    "gt_path",
    "pred_path",
    "spacing",
    "label_mode",
    "class_ids",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub case_id: String,
    pub fold: usize,
    pub domain: String,
    pub is_ood: bool,
    pub gt_path: PathBuf,
    pub pred_path: PathBuf,
    pub conf_path: Option<PathBuf>,
    pub sample_paths: Vec<PathBuf>,
    pub feature_path: Option<PathBuf>,
    pub meta: VolumeMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub rows: Vec<ManifestRow>,
}

struct RowReader<'a> {
    path: &'a Path,
    base: &'a Path,
    row: usize,
}

impl RowReader<'_> {
    fn bad(&self, detail: impl Into<String>) -> Error {
        Error::BadRow {
            path: self.path.to_path_buf(),
            row: self.row,
            detail: detail.into(),
        }
    }

    fn resolve(&self, raw: &str) -> Result<PathBuf> {
        let target = self.base.join(raw.trim());
        if target.is_file() {
            Ok(target)
        } else {
            Err(Error::UnresolvedPath {
                path: self.path.to_path_buf(),
                row: self.row,
                target,
            })
        }
    }

    fn optional_path(&self, raw: Option<&str>) -> Result<Option<PathBuf>> {
        match raw.map(str::trim) {
            None | Some("") => Ok(None),
            Some(p) => self.resolve(p).map(Some),
        }
    }

    fn list<T: std::str::FromStr>(&self, column: &str, raw: &str) -> Result<Vec<T>> {
        raw.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| self.bad(format!("`{column}`: cannot parse `{s}`")))
            })
            .collect()
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let index_of = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut required = [0usize; REQUIRED_COLUMNS.len()];
    for (slot, name) in required.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = index_of(name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })?;
    }
    let [i_case, i_fold, i_domain, i_ood, i_gt, i_pred, i_spacing, i_mode, i_classes] = required;
    let (i_conf, i_samples, i_feature) = (
        index_of("conf_path"),
        index_of("sample_paths"),
        index_of("feature_path"),
    );
    let base = path.parent().unwrap_or(Path::new("."));

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    let mut first_meta: Option<(LabelMode, Vec<u32>, usize)> = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let r = RowReader { path, base, row: k + 1 };
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let opt = |i: Option<usize>| i.and_then(|i| record.get(i));

        let case_id = field(i_case).to_string();
        if case_id.is_empty() {
            return Err(r.bad("empty case_id"));
        }
        let fold = field(i_fold)
            .parse::<usize>()
            .map_err(|_| r.bad(format!("`fold`: cannot parse `{}`", field(i_fold))))?;
        if !seen.insert((case_id.clone(), fold)) {
            return Err(Error::DuplicateCase {
                path: path.to_path_buf(),
                row: r.row,
                case_id,
                fold,
            });
        }
        let is_ood = parse_bool(field(i_ood))
            .ok_or_else(|| r.bad(format!("`is_ood`: cannot parse `{}`", field(i_ood))))?;
        let label_mode = match field(i_mode).to_ascii_lowercase().as_str() {
            "exclusive" => LabelMode::Exclusive,
            "regions" => LabelMode::Regions,
            other => return Err(r.bad(format!("`label_mode`: unknown mode `{other}`"))),
        };
        let spacing: Vec<f64> = r.list("spacing", field(i_spacing))?;
        if !(2..=3).contains(&spacing.len()) {
            return Err(r.bad(format!("`spacing`: expected 2 or 3 entries, got {}", spacing.len())));
        }
        let class_ids: Vec<u32> = r.list("class_ids", field(i_classes))?;
        match &first_meta {
            None => first_meta = Some((label_mode, class_ids.clone(), spacing.len())),
            Some((mode, ids, ndim)) => {
                if *mode != label_mode || *ids != class_ids || *ndim != spacing.len() {
                    return Err(r.bad(
                        "label_mode, class_ids and spacing dimensionality must match the first row",
                    ));
                }
            }
        }
        let sample_paths = match opt(i_samples) {
            Some(raw) => raw
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| r.resolve(s))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };

        rows.push(ManifestRow {
            gt_path: r.resolve(field(i_gt))?,
            pred_path: r.resolve(field(i_pred))?,
            conf_path: r.optional_path(opt(i_conf))?,
            sample_paths,
            feature_path: r.optional_path(opt(i_feature))?,
            domain: field(i_domain).to_string(),
            case_id,
            fold,
            is_ood,
            meta: VolumeMeta {
                spacing,
                label_mode,
                class_ids,
            },
        });
    }
    Ok(Manifest {
        path: path.to_path_buf(),
        rows,
    })
}
