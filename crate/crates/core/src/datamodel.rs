//! Core domain types shared by every other module.
//!
//! All constructors validate their invariants and return a typed error; no
//! partially built value is ever handed out. Voxel data is stored flat in
//! C order (last axis fastest), matching the NPY layout read by [`crate::io`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// One integer label per voxel, 0 is background.
    Exclusive,
    /// One binary mask per region; regions may overlap or nest.
    Regions,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelData {
    Exclusive(Vec<u32>),
    /// Channel-major: `masks[r][voxel]`.
    Regions(Vec<Vec<bool>>),
}

/// A 2D or 3D discrete segmentation with voxel spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    class_ids: Vec<u32>,
    data: LabelData,
}

pub(crate) fn check_dims(dims: &[usize]) -> Result<usize> {
    if !(2..=3).contains(&dims.len()) {
        return Err(Error::invalid(
            "dims",
            format!("expected 2 or 3 axes, got {}", dims.len()),
        ));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::invalid("dims", format!("zero extent in {dims:?}")));
    }
    Ok(dims.iter().product())
}

fn check_spacing(dims: &[usize], spacing: &[f64]) -> Result<()> {
    if spacing.len() != dims.len() {
        return Err(Error::DimMismatch {
            field: "spacing",
            left: format!("{} axes", dims.len()),
            right: format!("{} spacing entries", spacing.len()),
        });
    }
    if let Some(s) = spacing.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::invalid("spacing", format!("must be > 0, got {s}")));
    }
    Ok(())
}

fn check_class_ids(class_ids: &[u32]) -> Result<()> {
    if class_ids.contains(&0) {
        return Err(Error::ClassSetMismatch {
            field: "class_ids",
            detail: "0 is reserved for background".into(),
        });
    }
    let mut sorted = class_ids.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::ClassSetMismatch {
            field: "class_ids",
            detail: format!("duplicate ids in {class_ids:?}"),
        });
    }
    Ok(())
}

impl LabelMap {
    pub fn exclusive(
        dims: Vec<usize>,
        spacing: Vec<f64>,
        class_ids: Vec<u32>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        let n = check_dims(&dims)?;
        check_spacing(&dims, &spacing)?;
        check_class_ids(&class_ids)?;
        if labels.len() != n {
            return Err(Error::DimMismatch {
                field: "data",
                left: format!("{n} voxels"),
                right: format!("{} values", labels.len()),
            });
        }
        if let Some(bad) = labels
            .iter()
            .find(|&&l| l != 0 && !class_ids.contains(&l))
        {
            return Err(Error::ClassSetMismatch {
                field: "data",
                detail: format!("label {bad} not in {{0}} ∪ {class_ids:?}"),
            });
        }
        Ok(Self {
            dims,
            spacing,
            class_ids,
            data: LabelData::Exclusive(labels),
        })
    }

    pub fn regions(
        dims: Vec<usize>,
        spacing: Vec<f64>,
        class_ids: Vec<u32>,
        masks: Vec<Vec<bool>>,
    ) -> Result<Self> {
        let n = check_dims(&dims)?;
        check_spacing(&dims, &spacing)?;
        check_class_ids(&class_ids)?;
        if masks.len() != class_ids.len() {
            return Err(Error::ClassSetMismatch {
                field: "data",
                detail: format!(
                    "{} region channels for {} class ids",
                    masks.len(),
                    class_ids.len()
                ),
            });
        }
        if let Some(m) = masks.iter().find(|m| m.len() != n) {
            return Err(Error::DimMismatch {
                field: "data",
                left: format!("{n} voxels"),
                right: format!("{} values", m.len()),
            });
        }
        Ok(Self {
            dims,
            spacing,
            class_ids,
            data: LabelData::Regions(masks),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn class_ids(&self) -> &[u32] {
        &self.class_ids
    }

    pub fn data(&self) -> &LabelData {
        &self.data
    }

    pub fn mode(&self) -> LabelMode {
        match self.data {
            LabelData::Exclusive(_) => LabelMode::Exclusive,
            LabelData::Regions(_) => LabelMode::Regions,
        }
    }

    pub fn n_voxels(&self) -> usize {
        self.dims.iter().product()
    }

    /// Binary mask of the `index`-th entry of `class_ids`.
    pub fn mask_at(&self, index: usize) -> Vec<bool> {
        match &self.data {
            LabelData::Exclusive(labels) => {
                let id = self.class_ids[index];
                labels.iter().map(|&l| l == id).collect()
            }
            LabelData::Regions(masks) => masks[index].clone(),
        }
    }

    pub fn class_mask(&self, class_id: u32) -> Result<Vec<bool>> {
        let index = self
            .class_ids
            .iter()
            .position(|&c| c == class_id)
            .ok_or_else(|| Error::ClassSetMismatch {
                field: "class_subset",
                detail: format!("class {class_id} not in {:?}", self.class_ids),
            })?;
        Ok(self.mask_at(index))
    }

    /// Union of all foreground classes or regions.
    pub fn foreground_mask(&self) -> Vec<bool> {
        match &self.data {
            LabelData::Exclusive(labels) => labels.iter().map(|&l| l != 0).collect(),
            LabelData::Regions(masks) => {
                let mut fg = vec![false; self.n_voxels()];
                for m in masks {
                    for (f, &v) in fg.iter_mut().zip(m) {
                        *f |= v;
                    }
                }
                fg
            }
        }
    }

    /// Whether voxels `a` and `b` carry different predicted labels (for
    /// REGIONS: differ in any region channel).
    pub(crate) fn labels_differ(&self, a: usize, b: usize) -> bool {
        match &self.data {
            LabelData::Exclusive(labels) => labels[a] != labels[b],
            LabelData::Regions(masks) => masks.iter().any(|m| m[a] != m[b]),
        }
    }
}

/// Succeeds iff the two maps agree on dims, spacing, label mode, and class ids.
pub fn validate_pair(pred: &LabelMap, gt: &LabelMap) -> Result<()> {
    if pred.dims != gt.dims {
        return Err(Error::dims("dims", &pred.dims, &gt.dims));
    }
    if pred.spacing != gt.spacing {
        return Err(Error::DimMismatch {
            field: "spacing",
            left: format!("{:?}", pred.spacing),
            right: format!("{:?}", gt.spacing),
        });
    }
    if pred.mode() != gt.mode() {
        return Err(Error::ModeMismatch {
            left: pred.mode(),
            right: gt.mode(),
        });
    }
    if pred.class_ids != gt.class_ids {
        return Err(Error::ClassSetMismatch {
            field: "class_ids",
            detail: format!("{:?} vs {:?}", pred.class_ids, gt.class_ids),
        });
    }
    Ok(())
}

/// Per-voxel confidence in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl ConfidenceMap {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = check_dims(&dims)?;
        if values.len() != n {
            return Err(Error::DimMismatch {
                field: "values",
                left: format!("{n} voxels"),
                right: format!("{} values", values.len()),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid("values", format!("{v} outside [0, 1]")));
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn check_matches(&self, labels: &LabelMap) -> Result<()> {
        if self.dims != labels.dims() {
            return Err(Error::dims("dims", &self.dims, labels.dims()));
        }
        Ok(())
    }
}

/// Per-case evaluation record: risks per risk function and confidences per
/// method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CaseRecordRepr", into = "CaseRecordRepr")]
pub struct CaseRecord {
    case_id: String,
    fold: usize,
    domain: String,
    is_ood: bool,
    risks: BTreeMap<String, f64>,
    confidences: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseRecordRepr {
    case_id: String,
    fold: usize,
    domain: String,
    is_ood: bool,
    risks: BTreeMap<String, f64>,
    confidences: BTreeMap<String, f64>,
}

impl TryFrom<CaseRecordRepr> for CaseRecord {
    type Error = Error;

    fn try_from(r: CaseRecordRepr) -> Result<Self> {
        CaseRecord::new(r.case_id, r.fold, r.domain, r.is_ood, r.risks, r.confidences)
    }
}

impl From<CaseRecord> for CaseRecordRepr {
    fn from(r: CaseRecord) -> Self {
        CaseRecordRepr {
            case_id: r.case_id,
            fold: r.fold,
            domain: r.domain,
            is_ood: r.is_ood,
            risks: r.risks,
            confidences: r.confidences,
        }
    }
}

impl CaseRecord {
    /// Risks must lie in [0, 1]; confidences may be any finite real.
    pub fn new(
        case_id: String,
        fold: usize,
        domain: String,
        is_ood: bool,
        risks: BTreeMap<String, f64>,
        confidences: BTreeMap<String, f64>,
    ) -> Result<Self> {
        for (i, (name, &r)) in risks.iter().enumerate() {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid(
                    "risks",
                    format!("`{name}` (entry {i}) = {r} outside [0, 1]"),
                ));
            }
        }
        if let Some((name, c)) = confidences.iter().find(|(_, c)| !c.is_finite()) {
            return Err(Error::invalid(
                "confidences",
                format!("`{name}` = {c} is not finite"),
            ));
        }
        Ok(Self {
            case_id,
            fold,
            domain,
            is_ood,
            risks,
            confidences,
        })
    }

    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    pub fn fold(&self) -> usize {
        self.fold
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn is_ood(&self) -> bool {
        self.is_ood
    }

    pub fn risks(&self) -> &BTreeMap<String, f64> {
        &self.risks
    }

    pub fn confidences(&self) -> &BTreeMap<String, f64> {
        &self.confidences
    }

    pub fn risk(&self, name: &str) -> Option<f64> {
        self.risks.get(name).copied()
    }

    pub fn confidence(&self, method: &str) -> Option<f64> {
        self.confidences.get(method).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskMetric {
    #[serde(rename = "dsc")]
    Dsc,
    #[serde(rename = "generalized_dsc")]
    GeneralizedDsc,
    #[serde(rename = "nsd")]
    Nsd,
}

/// Which segmentation metric a risk is derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskSpec {
    pub metric: RiskMetric,
    /// Restrict the metric to these classes; all classes when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_subset: Option<Vec<u32>>,
    /// Surface tolerance in physical units shared by every class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nsd_tolerance: Option<f64>,
    /// Per-class overrides of `nsd_tolerance`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub nsd_class_tolerances: BTreeMap<u32, f64>,
}

impl RiskSpec {
    pub fn new(metric: RiskMetric) -> Self {
        Self {
            metric,
            class_subset: None,
            nsd_tolerance: None,
            nsd_class_tolerances: BTreeMap::new(),
        }
    }

    pub fn nsd(tolerance: f64) -> Self {
        Self {
            nsd_tolerance: Some(tolerance),
            ..Self::new(RiskMetric::Nsd)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tolerances = self
            .nsd_tolerance
            .iter()
            .chain(self.nsd_class_tolerances.values());
        for &t in tolerances {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::BadTolerance(t));
            }
        }
        if self.metric == RiskMetric::Nsd && self.nsd_tolerance.is_none() {
            return Err(Error::invalid(
                "nsd_tolerance",
                "required when metric is nsd",
            ));
        }
        if self.metric != RiskMetric::Nsd
            && (self.nsd_tolerance.is_some() || !self.nsd_class_tolerances.is_empty())
        {
            return Err(Error::invalid(
                "nsd_tolerance",
                "only allowed when metric is nsd",
            ));
        }
        Ok(())
    }

    /// Tolerance for `class_id`; callers must have run [`RiskSpec::validate`].
    pub fn tolerance_for(&self, class_id: u32) -> Option<f64> {
        self.nsd_class_tolerances
            .get(&class_id)
            .copied()
            .or(self.nsd_tolerance)
    }
}

/// A fixed-length named feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    schema: Vec<String>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: Vec<String>) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: schema.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("features"));
        }
        Ok(Self { values, schema })
    }

    /// Unnamed features `f0, f1, ...`.
    pub fn unnamed(values: Vec<f64>) -> Result<Self> {
        let schema = (0..values.len()).map(|i| format!("f{i}")).collect();
        Self::new(values, schema)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(dims: Vec<usize>) -> LabelMap {
        let n = dims.iter().product();
        let spacing = vec![1.0; dims.len()];
        LabelMap::exclusive(dims, spacing, vec![1], vec![0; n]).unwrap()
    }

    #[test]
    fn identical_maps_validate() {
        validate_pair(&zeros(vec![4, 4]), &zeros(vec![4, 4])).unwrap();
    }

    #[test]
    fn differing_dims_are_rejected() {
        let err = validate_pair(&zeros(vec![4, 4]), &zeros(vec![4, 5])).unwrap_err();
        assert_eq!(err.code(), "DIM_MISMATCH");
        assert!(err.to_string().contains("dims"));
    }

    #[test]
    fn differing_modes_are_rejected() {
        let regions =
            LabelMap::regions(vec![4, 4], vec![1.0, 1.0], vec![1], vec![vec![false; 16]]).unwrap();
        let err = validate_pair(&zeros(vec![4, 4]), &regions).unwrap_err();
        assert_eq!(err.code(), "MODE_MISMATCH");
    }

    #[test]
    fn differing_class_sets_and_spacing_are_rejected() {
        let a = zeros(vec![2, 2]);
        let b = LabelMap::exclusive(vec![2, 2], vec![1.0, 1.0], vec![1, 2], vec![0; 4]).unwrap();
        assert_eq!(validate_pair(&a, &b).unwrap_err().code(), "CLASS_SET_MISMATCH");
        let c = LabelMap::exclusive(vec![2, 2], vec![1.0, 2.0], vec![1], vec![0; 4]).unwrap();
        let err = validate_pair(&a, &c).unwrap_err();
        assert_eq!(err.code(), "DIM_MISMATCH");
        assert!(err.to_string().contains("spacing"));
    }

    #[test]
    fn construction_rejects_invariant_violations() {
        let e = LabelMap::exclusive(vec![2, 2], vec![1.0, 1.0], vec![1], vec![0, 0, 2, 0]);
        assert_eq!(e.unwrap_err().code(), "CLASS_SET_MISMATCH");
        let e = LabelMap::exclusive(vec![2, 2], vec![1.0, 1.0], vec![0, 1], vec![0; 4]);
        assert_eq!(e.unwrap_err().code(), "CLASS_SET_MISMATCH");
        let e = LabelMap::exclusive(vec![2, 2], vec![1.0, 1.0], vec![1], vec![0; 5]);
        assert_eq!(e.unwrap_err().code(), "DIM_MISMATCH");
        let e = LabelMap::exclusive(vec![4], vec![1.0], vec![1], vec![0; 4]);
        assert_eq!(e.unwrap_err().code(), "INVALID_VALUE");
        let e = LabelMap::exclusive(vec![2, 2], vec![1.0, 0.0], vec![1], vec![0; 4]);
        assert_eq!(e.unwrap_err().code(), "INVALID_VALUE");
        let e = LabelMap::regions(vec![2, 2], vec![1.0, 1.0], vec![1, 2], vec![vec![false; 4]]);
        assert_eq!(e.unwrap_err().code(), "CLASS_SET_MISMATCH");
        let e = ConfidenceMap::new(vec![1, 2], vec![0.5, 1.5]);
        assert_eq!(e.unwrap_err().code(), "INVALID_VALUE");
        let e = ConfidenceMap::new(vec![1, 2], vec![0.5, f64::NAN]);
        assert_eq!(e.unwrap_err().code(), "INVALID_VALUE");
    }

    #[test]
    fn case_record_checks_ranges() {
        let risks = BTreeMap::from([("dsc".to_string(), 1.2)]);
        let e = CaseRecord::new("a".into(), 0, "id".into(), false, risks, BTreeMap::new());
        assert!(e.is_err());
        let conf = BTreeMap::from([("mahalanobis".to_string(), -12.5)]);
        let ok = CaseRecord::new("a".into(), 0, "id".into(), false, BTreeMap::new(), conf);
        assert_eq!(ok.unwrap().confidence("mahalanobis"), Some(-12.5));
    }

    #[test]
    fn case_record_json_rejects_bad_risk() {
        let json = r#"{"case_id":"a","fold":0,"domain":"x","is_ood":false,
            "risks":{"dsc":-0.1},"confidences":{}}"#;
        assert!(serde_json::from_str::<CaseRecord>(json).is_err());
    }

    #[test]
    fn risk_spec_tolerance_rules() {
        assert_eq!(RiskSpec::nsd(0.0).validate().unwrap_err().code(), "BAD_TOLERANCE");
        assert!(RiskSpec::new(RiskMetric::Nsd).validate().is_err());
        let mut spec = RiskSpec::nsd(2.0);
        spec.nsd_class_tolerances.insert(3, 1.0);
        spec.validate().unwrap();
        assert_eq!(spec.tolerance_for(3), Some(1.0));
        assert_eq!(spec.tolerance_for(1), Some(2.0));
    }

    #[test]
    fn feature_vector_invariants() {
        assert!(FeatureVector::new(vec![1.0], vec![]).is_err());
        assert!(FeatureVector::unnamed(vec![f64::INFINITY]).is_err());
        assert_eq!(FeatureVector::unnamed(vec![1.0, 2.0]).unwrap().schema(), ["f0", "f1"]);
    }
}
