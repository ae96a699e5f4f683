//! Segmentation quality metrics, risks derived from them, and conversion of
//! probability maps into discrete predictions and confidence maps.
//!
//! Conventions shared by every metric here:
//! - an empty structure predicted empty scores 1.0 (DSC and NSD alike);
//! - multi-class scores average over foreground classes only.

use crate::datamodel::{validate_pair, ConfidenceMap, LabelMap, LabelMode, RiskMetric, RiskSpec};
use crate::edt::squared_edt;
use crate::error::{Error, Result};
use crate::grid;

/// Softmax (EXCLUSIVE) or independent sigmoid (REGIONS) outputs.
///
/// For EXCLUSIVE maps channel 0 is background and channel `c >= 1` maps to
/// `class_ids[c - 1]`; for REGIONS channel `r` maps to `class_ids[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    dims: Vec<usize>,
    mode: LabelMode,
    channels: Vec<Vec<f64>>,
    class_ids: Vec<u32>,
    spacing: Vec<f64>,
}

const SUM_TOLERANCE: f64 = 1e-5;

impl ProbabilityMap {
    /// `channels[c][voxel]`; class ids default to `1..` and spacing to 1.
    pub fn new(dims: Vec<usize>, mode: LabelMode, channels: Vec<Vec<f64>>) -> Result<Self> {
        let n = crate::datamodel::check_dims(&dims)?;
        let min_channels = match mode {
            LabelMode::Exclusive => 2,
            LabelMode::Regions => 1,
        };
        if channels.len() < min_channels {
            return Err(Error::invalid(
                "channels",
                format!("{mode:?} needs at least {min_channels} channels, got {}", channels.len()),
            ));
        }
        if let Some(c) = channels.iter().find(|c| c.len() != n) {
            return Err(Error::DimMismatch {
                field: "channels",
                left: format!("{n} voxels"),
                right: format!("{} values", c.len()),
            });
        }
        for c in &channels {
            if let Some(v) = c.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid("channels", format!("{v} outside [0, 1]")));
            }
        }
        if mode == LabelMode::Exclusive {
            for i in 0..n {
                let s: f64 = channels.iter().map(|c| c[i]).sum();
                if (s - 1.0).abs() > SUM_TOLERANCE {
                    return Err(Error::invalid(
                        "channels",
                        format!("probabilities at voxel {i} sum to {s}"),
                    ));
                }
            }
        }
        let n_fg = match mode {
            LabelMode::Exclusive => channels.len() - 1,
            LabelMode::Regions => channels.len(),
        };
        let class_ids = (1..=n_fg as u32).collect();
        let spacing = vec![1.0; dims.len()];
        Ok(Self {
            dims,
            mode,
            channels,
            class_ids,
            spacing,
        })
    }

    pub fn with_class_ids(mut self, class_ids: Vec<u32>) -> Result<Self> {
        if class_ids.len() != self.class_ids.len() {
            return Err(Error::ClassSetMismatch {
                field: "class_ids",
                detail: format!(
                    "{} ids for {} foreground channels",
                    class_ids.len(),
                    self.class_ids.len()
                ),
            });
        }
        self.class_ids = class_ids;
        Ok(self)
    }

    pub fn with_spacing(mut self, spacing: Vec<f64>) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    fn n_voxels(&self) -> usize {
        self.dims.iter().product()
    }
}

fn check_masks(a: &[bool], b: &[bool]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            field: "mask",
            left: format!("{} voxels", a.len()),
            right: format!("{} voxels", b.len()),
        });
    }
    Ok(())
}

struct Overlap {
    intersection: usize,
    pred: usize,
    gt: usize,
}

fn overlap(pred: &[bool], gt: &[bool]) -> Overlap {
    let mut o = Overlap {
        intersection: 0,
        pred: 0,
        gt: 0,
    };
    for (&p, &g) in pred.iter().zip(gt) {
        o.pred += p as usize;
        o.gt += g as usize;
        o.intersection += (p && g) as usize;
    }
    o
}

fn dice_from(o: &Overlap) -> f64 {
    let denom = o.pred + o.gt;
    if denom == 0 {
        1.0
    } else {
        (2 * o.intersection) as f64 / denom as f64
    }
}

/// Dice coefficient of two binary masks over the same grid.
pub fn dsc_binary(pred_mask: &[bool], gt_mask: &[bool]) -> Result<f64> {
    check_masks(pred_mask, gt_mask)?;
    Ok(dice_from(&overlap(pred_mask, gt_mask)))
}

fn class_indices(map: &LabelMap, subset: Option<&[u32]>) -> Result<Vec<usize>> {
    match subset {
        None => Ok((0..map.class_ids().len()).collect()),
        Some(ids) => ids
            .iter()
            .map(|id| {
                map.class_ids()
                    .iter()
                    .position(|c| c == id)
                    .ok_or_else(|| Error::ClassSetMismatch {
                        field: "class_subset",
                        detail: format!("class {id} not in {:?}", map.class_ids()),
                    })
            })
            .collect(),
    }
}

/// DSC of every foreground class, in `class_ids` order.
pub fn per_class_dsc(pred: &LabelMap, gt: &LabelMap) -> Result<Vec<f64>> {
    validate_pair(pred, gt)?;
    Ok((0..pred.class_ids().len())
        .map(|i| dice_from(&overlap(&pred.mask_at(i), &gt.mask_at(i))))
        .collect())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unweighted mean of per-class DSC over foreground classes.
pub fn mean_dsc(pred: &LabelMap, gt: &LabelMap) -> Result<f64> {
    mean_dsc_over(pred, gt, None)
}

pub fn mean_dsc_over(pred: &LabelMap, gt: &LabelMap, subset: Option<&[u32]>) -> Result<f64> {
    validate_pair(pred, gt)?;
    let idx = class_indices(pred, subset)?;
    if idx.is_empty() {
        return Ok(1.0);
    }
    let scores: Vec<f64> = idx
        .iter()
        .map(|&i| dice_from(&overlap(&pred.mask_at(i), &gt.mask_at(i))))
        .collect();
    Ok(mean(&scores))
}

/// Generalised Dice with inverse squared reference-volume weights.
pub fn generalized_dsc(pred: &LabelMap, gt: &LabelMap) -> Result<f64> {
    generalized_dsc_over(pred, gt, None)
}

pub fn generalized_dsc_over(
    pred: &LabelMap,
    gt: &LabelMap,
    subset: Option<&[u32]>,
) -> Result<f64> {
    validate_pair(pred, gt)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in class_indices(pred, subset)? {
        let o = overlap(&pred.mask_at(i), &gt.mask_at(i));
        let v = o.gt.max(1) as f64;
        let w = 1.0 / (v * v);
        num += w * o.intersection as f64;
        den += w * (o.pred + o.gt) as f64;
    }
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok((2.0 * num / den).min(1.0))
}

/// Mask voxels that touch a voxel outside the mask or the grid border.
pub fn boundary_voxels(mask: &[bool], dims: &[usize]) -> Vec<bool> {
    let strides = grid::strides(dims);
    (0..mask.len())
        .map(|i| {
            if !mask[i] {
                return false;
            }
            if grid::on_border(dims, &strides, i) {
                return true;
            }
            let mut outside = false;
            grid::for_each_face_neighbor(dims, &strides, i, |j| outside |= !mask[j]);
            outside
        })
        .collect()
}

/// Normalised surface Dice at the given physical tolerance.
pub fn nsd_binary(
    pred_mask: &[bool],
    gt_mask: &[bool],
    dims: &[usize],
    spacing: &[f64],
    tolerance: f64,
) -> Result<f64> {
    check_masks(pred_mask, gt_mask)?;
    let n: usize = dims.iter().product();
    if pred_mask.len() != n || spacing.len() != dims.len() {
        return Err(Error::dims("dims", dims, &[pred_mask.len()]));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::BadTolerance(tolerance));
    }
    let bp = boundary_voxels(pred_mask, dims);
    let bg = boundary_voxels(gt_mask, dims);
    let np = bp.iter().filter(|&&b| b).count();
    let ng = bg.iter().filter(|&&b| b).count();
    match (np, ng) {
        (0, 0) => return Ok(1.0),
        (0, _) | (_, 0) => return Ok(0.0),
        _ => {}
    }
    let tol2 = tolerance * tolerance;
    let to_gt = squared_edt(&bg, dims, spacing);
    let to_pred = squared_edt(&bp, dims, spacing);
    let close_pred = (0..n).filter(|&i| bp[i] && to_gt[i] <= tol2).count();
    let close_gt = (0..n).filter(|&i| bg[i] && to_pred[i] <= tol2).count();
    Ok((close_pred + close_gt) as f64 / (np + ng) as f64)
}

/// Mean NSD over the risk's classes using each class' tolerance.
pub fn mean_nsd(pred: &LabelMap, gt: &LabelMap, spec: &RiskSpec) -> Result<f64> {
    validate_pair(pred, gt)?;
    spec.validate()?;
    let idx = class_indices(pred, spec.class_subset.as_deref())?;
    if idx.is_empty() {
        return Ok(1.0);
    }
    let mut scores = Vec::with_capacity(idx.len());
    for i in idx {
        let id = pred.class_ids()[i];
        let tol = spec
            .tolerance_for(id)
            .ok_or_else(|| Error::invalid("nsd_tolerance", format!("missing for class {id}")))?;
        scores.push(nsd_binary(
            &pred.mask_at(i),
            &gt.mask_at(i),
            pred.dims(),
            pred.spacing(),
            tol,
        )?);
    }
    Ok(mean(&scores))
}

/// The segmentation metric selected by `spec` (higher is better).
pub fn metric_value(pred: &LabelMap, gt: &LabelMap, spec: &RiskSpec) -> Result<f64> {
    spec.validate()?;
    let subset = spec.class_subset.as_deref();
    match spec.metric {
        RiskMetric::Dsc => mean_dsc_over(pred, gt, subset),
        RiskMetric::GeneralizedDsc => generalized_dsc_over(pred, gt, subset),
        RiskMetric::Nsd => mean_nsd(pred, gt, spec),
    }
}

/// Risk = 1 − metric.
pub fn compute_risk(pred: &LabelMap, gt: &LabelMap, spec: &RiskSpec) -> Result<f64> {
    Ok(1.0 - metric_value(pred, gt, spec)?)
}

/// Argmax (ties to the lowest channel) for EXCLUSIVE maps, threshold 0.5 for
/// REGIONS maps.
pub fn probs_to_prediction(p: &ProbabilityMap) -> Result<LabelMap> {
    let n = p.n_voxels();
    match p.mode {
        LabelMode::Exclusive => {
            let labels = (0..n)
                .map(|i| {
                    let mut best = 0;
                    for c in 1..p.channels.len() {
                        if p.channels[c][i] > p.channels[best][i] {
                            best = c;
                        }
                    }
                    if best == 0 {
                        0
                    } else {
                        p.class_ids[best - 1]
                    }
                })
                .collect();
            LabelMap::exclusive(p.dims.clone(), p.spacing.clone(), p.class_ids.clone(), labels)
        }
        LabelMode::Regions => {
            let masks = p
                .channels
                .iter()
                .map(|c| c.iter().map(|&v| v >= 0.5).collect())
                .collect();
            LabelMap::regions(p.dims.clone(), p.spacing.clone(), p.class_ids.clone(), masks)
        }
    }
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// One minus normalised predictive entropy per voxel. REGIONS maps take the
/// minimum over per-region binary-entropy confidences.
pub fn probs_to_confidence(p: &ProbabilityMap) -> Result<ConfidenceMap> {
    let n = p.n_voxels();
    let values = match p.mode {
        LabelMode::Exclusive => {
            let norm = (p.channels.len() as f64).ln();
            (0..n)
                .map(|i| {
                    let pe: f64 = -p.channels.iter().map(|c| xlogx(c[i])).sum::<f64>();
                    (1.0 - pe / norm).clamp(0.0, 1.0)
                })
                .collect()
        }
        LabelMode::Regions => {
            let norm = std::f64::consts::LN_2;
            (0..n)
                .map(|i| {
                    p.channels
                        .iter()
                        .map(|c| {
                            let h = -(xlogx(c[i]) + xlogx(1.0 - c[i]));
                            (1.0 - h / norm).clamp(0.0, 1.0)
                        })
                        .fold(1.0, f64::min)
                })
                .collect()
        }
    };
    ConfidenceMap::new(p.dims.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(n: usize, on: &[usize]) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in on {
            m[i] = true;
        }
        m
    }

    fn excl(dims: Vec<usize>, class_ids: Vec<u32>, labels: Vec<u32>) -> LabelMap {
        let spacing = vec![1.0; dims.len()];
        LabelMap::exclusive(dims, spacing, class_ids, labels).unwrap()
    }

    #[test]
    fn dsc_examples() {
        let p = mask(8, &[0, 1, 2, 3]);
        assert_eq!(dsc_binary(&p, &p).unwrap(), 1.0);
        let g = mask(8, &[2, 3, 4, 5]);
        assert_eq!(dsc_binary(&p, &g).unwrap(), 0.5);
        assert_eq!(dsc_binary(&mask(8, &[]), &mask(8, &[0, 1, 2])).unwrap(), 0.0);
        assert_eq!(dsc_binary(&mask(8, &[]), &mask(8, &[])).unwrap(), 1.0);
        assert_eq!(dsc_binary(&p, &mask(7, &[])).unwrap_err().code(), "DIM_MISMATCH");
    }

    #[test]
    fn mean_dsc_averages_classes() {
        // class 1 matches perfectly, class 2 is disjoint
        let pred = excl(vec![1, 4], vec![1, 2], vec![1, 1, 2, 0]);
        let gt = excl(vec![1, 4], vec![1, 2], vec![1, 1, 0, 2]);
        assert_eq!(mean_dsc(&pred, &gt).unwrap(), 0.5);
        assert_eq!(mean_dsc(&gt, &gt).unwrap(), 1.0);
    }

    #[test]
    fn generalized_dsc_single_class_matches_binary() {
        let pred = excl(vec![2, 4], vec![1], vec![1, 1, 1, 1, 0, 0, 0, 0]);
        let gt = excl(vec![2, 4], vec![1], vec![0, 0, 1, 1, 1, 1, 0, 0]);
        let d = dsc_binary(&pred.mask_at(0), &gt.mask_at(0)).unwrap();
        assert_eq!(generalized_dsc(&pred, &gt).unwrap(), d);
        assert_eq!(generalized_dsc(&gt, &gt).unwrap(), 1.0);
    }

    #[test]
    fn generalized_dsc_weighted_counts() {
        // class 1: |G|=4, |P|=2, inter 2 ; class 2: |G|=1, |P|=2, inter 1
        let gt = excl(vec![2, 4], vec![1, 2], vec![1, 1, 1, 1, 2, 0, 0, 0]);
        let pred = excl(vec![2, 4], vec![1, 2], vec![1, 1, 0, 0, 2, 2, 0, 0]);
        let (w1, w2) = (1.0 / 16.0, 1.0);
        let expected = 2.0 * (w1 * 2.0 + w2 * 1.0) / (w1 * 6.0 + w2 * 3.0);
        assert!((generalized_dsc(&pred, &gt).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn nsd_examples() {
        let dims = [1, 7];
        let sp = [1.0, 1.0];
        let a = mask(7, &[0]);
        let b = mask(7, &[3]);
        assert_eq!(nsd_binary(&a, &a, &dims, &sp, 0.5).unwrap(), 1.0);
        assert_eq!(nsd_binary(&a, &b, &dims, &sp, 1.0).unwrap(), 0.0);
        assert_eq!(nsd_binary(&a, &b, &dims, &sp, 3.0).unwrap(), 1.0);
        assert_eq!(nsd_binary(&a, &mask(7, &[]), &dims, &sp, 3.0).unwrap(), 0.0);
        assert_eq!(nsd_binary(&mask(7, &[]), &mask(7, &[]), &dims, &sp, 3.0).unwrap(), 1.0);
        assert_eq!(
            nsd_binary(&a, &b, &dims, &sp, 0.0).unwrap_err().code(),
            "BAD_TOLERANCE"
        );
    }

    #[test]
    fn nsd_respects_spacing() {
        let dims = [1, 7];
        let a = mask(7, &[0]);
        let b = mask(7, &[3]);
        assert_eq!(nsd_binary(&a, &b, &dims, &[1.0, 2.0], 3.0).unwrap(), 0.0);
        assert_eq!(nsd_binary(&a, &b, &dims, &[1.0, 2.0], 6.0).unwrap(), 1.0);
    }

    #[test]
    fn boundary_of_solid_block() {
        let dims = [4, 4];
        let b = boundary_voxels(&[true; 16], &dims);
        // full image: only the grid border counts as surface
        assert_eq!(b.iter().filter(|&&x| x).count(), 12);
        let mut hole = [true; 16];
        hole[5] = false;
        assert_eq!(boundary_voxels(&hole, &dims).iter().filter(|&&x| x).count(), 14);
    }

    #[test]
    fn risk_examples() {
        let a = excl(vec![1, 4], vec![1], vec![1, 1, 0, 0]);
        let b = excl(vec![1, 4], vec![1], vec![0, 0, 1, 1]);
        let spec = RiskSpec::new(RiskMetric::Dsc);
        assert_eq!(compute_risk(&a, &a, &spec).unwrap(), 0.0);
        assert_eq!(compute_risk(&a, &b, &spec).unwrap(), 1.0);
        assert!((1.0 - 0.495f64 - 0.505).abs() < 1e-15);
    }

    #[test]
    fn risk_class_subset() {
        let pred = excl(vec![1, 4], vec![1, 2], vec![1, 1, 2, 0]);
        let gt = excl(vec![1, 4], vec![1, 2], vec![1, 1, 0, 2]);
        let mut spec = RiskSpec::new(RiskMetric::Dsc);
        spec.class_subset = Some(vec![1]);
        assert_eq!(compute_risk(&pred, &gt, &spec).unwrap(), 0.0);
        spec.class_subset = Some(vec![7]);
        assert_eq!(compute_risk(&pred, &gt, &spec).unwrap_err().code(), "CLASS_SET_MISMATCH");
    }

    #[test]
    fn prediction_rules() {
        let p = ProbabilityMap::new(
            vec![1, 2],
            LabelMode::Exclusive,
            vec![vec![0.2, 0.5], vec![0.7, 0.5], vec![0.1, 0.0]],
        )
        .unwrap();
        let pred = probs_to_prediction(&p).unwrap();
        assert_eq!(pred.data(), &crate::datamodel::LabelData::Exclusive(vec![1, 0]));
        let r = ProbabilityMap::new(vec![1, 2], LabelMode::Regions, vec![vec![0.5, 0.49]]).unwrap();
        assert_eq!(probs_to_prediction(&r).unwrap().mask_at(0), vec![true, false]);
    }

    #[test]
    fn prediction_uses_custom_class_ids() {
        let p = ProbabilityMap::new(vec![1, 1], LabelMode::Exclusive, vec![vec![0.1], vec![0.9]])
            .unwrap()
            .with_class_ids(vec![5])
            .unwrap();
        assert_eq!(probs_to_prediction(&p).unwrap().class_ids(), &[5]);
    }

    #[test]
    fn confidence_examples() {
        let p = ProbabilityMap::new(
            vec![1, 2],
            LabelMode::Exclusive,
            vec![vec![0.5, 1.0], vec![0.5, 0.0]],
        )
        .unwrap();
        assert_eq!(probs_to_confidence(&p).unwrap().values(), &[0.0, 1.0]);
        let three = ProbabilityMap::new(
            vec![1, 1],
            LabelMode::Exclusive,
            vec![vec![1.0], vec![0.0], vec![0.0]],
        )
        .unwrap();
        assert_eq!(probs_to_confidence(&three).unwrap().values(), &[1.0]);
        let r = ProbabilityMap::new(vec![1, 1], LabelMode::Regions, vec![vec![1.0], vec![0.5]])
            .unwrap();
        assert_eq!(probs_to_confidence(&r).unwrap().values(), &[0.0]);
    }

    #[test]
    fn probability_map_validation() {
        let e = ProbabilityMap::new(vec![1, 1], LabelMode::Exclusive, vec![vec![0.5], vec![0.6]]);
        assert!(e.is_err());
        let e = ProbabilityMap::new(vec![1, 1], LabelMode::Exclusive, vec![vec![1.0]]);
        assert!(e.is_err());
        let e = ProbabilityMap::new(vec![1, 1], LabelMode::Regions, vec![vec![1.2]]);
        assert!(e.is_err());
    }

    proptest! {
        #[test]
        fn dsc_is_symmetric_and_bounded(
            a in proptest::collection::vec(any::<bool>(), 64),
            b in proptest::collection::vec(any::<bool>(), 64),
        ) {
            let ab = dsc_binary(&a, &b).unwrap();
            prop_assert_eq!(ab, dsc_binary(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(dsc_binary(&a, &a).unwrap(), 1.0);
        }

        #[test]
        fn risk_plus_metric_is_one(
            a in proptest::collection::vec(0u32..3, 36),
            b in proptest::collection::vec(0u32..3, 36),
            which in 0usize..3,
        ) {
            let pa = excl(vec![6, 6], vec![1, 2], a);
            let pb = excl(vec![6, 6], vec![1, 2], b);
            let spec = match which {
                0 => RiskSpec::new(RiskMetric::Dsc),
                1 => RiskSpec::new(RiskMetric::GeneralizedDsc),
                _ => RiskSpec::nsd(1.5),
            };
            let m = metric_value(&pa, &pb, &spec).unwrap();
            let r = compute_risk(&pa, &pb, &spec).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
            prop_assert_eq!(r + m, 1.0);
            prop_assert_eq!(metric_value(&pa, &pa, &spec).unwrap(), 1.0);
        }

        #[test]
        fn confidence_bounded_and_permutation_invariant(
            raw in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 1..10),
        ) {
            let n = raw.len();
            let norm: Vec<Vec<f64>> = raw
                .iter()
                .map(|v| {
                    let s: f64 = v.iter().sum::<f64>() + 1e-9;
                    let mut p: Vec<f64> = v.iter().map(|x| x / s).collect();
                    let rest = 1.0 - p[0] - p[1];
                    p[2] = rest.max(0.0);
                    p
                })
                .collect();
            let channels = |order: [usize; 3]| -> Vec<Vec<f64>> {
                order.iter().map(|&c| norm.iter().map(|v| v[c]).collect()).collect()
            };
            let a = ProbabilityMap::new(vec![1, n], LabelMode::Exclusive, channels([0, 1, 2])).unwrap();
            let b = ProbabilityMap::new(vec![1, n], LabelMode::Exclusive, channels([2, 0, 1])).unwrap();
            let ca = probs_to_confidence(&a).unwrap();
            let cb = probs_to_confidence(&b).unwrap();
            for (x, y) in ca.values().iter().zip(cb.values()) {
                prop_assert!((0.0..=1.0).contains(x));
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
