//! Image-level confidence from a voxel confidence map and its prediction.
//!
//! Every mean here is a sequential sum in voxel order, clamped to the
//! [min, max] of the values it averages, so results are bit-reproducible and
//! constant inputs come back exactly.

use std::collections::VecDeque;

use crate::datamodel::{ConfidenceMap, FeatureVector, LabelMap};
use crate::error::{Error, Result};
use crate::grid;

pub const DEFAULT_BOUNDARY_WIDTH: usize = 4;
pub const DEFAULT_PATCH_SIZE: usize = 10;

pub const SIMPLE_FEATURE_NAMES: [&str; 5] = [
    "mean_conf_fg",
    "mean_conf_bg",
    "mean_conf_boundary",
    "fg_fraction",
    "n_components",
];

/// Value of a mean-confidence feature whose region is empty.
const EMPTY_REGION_CONFIDENCE: f64 = 1.0;

fn bounded_mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        sum += v;
        n += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (n > 0).then(|| (sum / n as f64).clamp(lo, hi))
}

fn masked_mean(conf: &ConfidenceMap, mask: &[bool]) -> Option<f64> {
    bounded_mean(
        conf.values()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v),
    )
}

/// Voxels within Chebyshev distance `< width` of a label transition.
///
/// A transition voxel has a face neighbour with a different predicted label
/// (REGIONS: differing in any region channel).
pub fn boundary_mask(pred: &LabelMap, width: usize) -> Result<Vec<bool>> {
    if width == 0 {
        return Err(Error::BadWidth(width));
    }
    let dims = pred.dims();
    let strides = grid::strides(dims);
    let mut mask: Vec<bool> = (0..pred.n_voxels())
        .map(|i| {
            let mut differs = false;
            grid::for_each_face_neighbor(dims, &strides, i, |j| {
                differs |= pred.labels_differ(i, j)
            });
            differs
        })
        .collect();
    let radius = width - 1;
    if radius > 0 {
        for axis in 0..dims.len() {
            dilate_axis(&mut mask, dims, &strides, axis, radius);
        }
    }
    Ok(mask)
}

fn dilate_axis(mask: &mut [bool], dims: &[usize], strides: &[usize], axis: usize, radius: usize) {
    let len = dims[axis];
    let step = strides[axis];
    let mut prefix = vec![0usize; len + 1];
    for start in grid::line_starts(dims, strides, axis) {
        for k in 0..len {
            prefix[k + 1] = prefix[k] + mask[start + k * step] as usize;
        }
        for k in 0..len {
            let lo = k.saturating_sub(radius);
            let hi = (k + radius + 1).min(len);
            mask[start + k * step] = prefix[hi] > prefix[lo];
        }
    }
}

pub fn agg_mean(conf: &ConfidenceMap) -> Result<f64> {
    bounded_mean(conf.values().iter().copied()).ok_or(Error::EmptyMap)
}

/// Mean confidence outside the boundary band; the plain mean if the band
/// covers everything.
pub fn agg_non_boundary(conf: &ConfidenceMap, pred: &LabelMap, width: usize) -> Result<f64> {
    conf.check_matches(pred)?;
    let keep: Vec<bool> = boundary_mask(pred, width)?.iter().map(|&b| !b).collect();
    match masked_mean(conf, &keep) {
        Some(v) => Ok(v),
        None => agg_mean(conf),
    }
}

/// Mean confidence over predicted foreground minus the boundary band, falling
/// back to all foreground, then to the plain mean.
pub fn agg_mean_foreground(conf: &ConfidenceMap, pred: &LabelMap, width: usize) -> Result<f64> {
    conf.check_matches(pred)?;
    let fg = pred.foreground_mask();
    let boundary = boundary_mask(pred, width)?;
    let inner: Vec<bool> = fg.iter().zip(&boundary).map(|(&f, &b)| f && !b).collect();
    if let Some(v) = masked_mean(conf, &inner) {
        return Ok(v);
    }
    if let Some(v) = masked_mean(conf, &fg) {
        return Ok(v);
    }
    agg_mean(conf)
}

fn window_starts(len: usize, patch: usize, stride: usize) -> Vec<(usize, usize)> {
    if len <= patch {
        return vec![(0, len)];
    }
    let mut starts: Vec<usize> = (0..).map(|k| k * stride).take_while(|&s| s + patch < len).collect();
    starts.push(len - patch);
    starts.dedup();
    starts.into_iter().map(|s| (s, patch)).collect()
}

/// Minimum over sliding windows of the window mean.
///
/// Windows are `patch_size` voxels per axis at stride `patch_size / 2`
/// (at least 1); the last window on each axis is clamped to end at the
/// border, and axes shorter than the patch use a single full-extent window.
pub fn agg_patch_min(conf: &ConfidenceMap, patch_size: usize) -> Result<f64> {
    if patch_size == 0 {
        return Err(Error::BadPatch(patch_size));
    }
    let dims = conf.dims();
    let strides = grid::strides(dims);
    let stride = (patch_size / 2).max(1);
    let per_axis: Vec<Vec<(usize, usize)>> = dims
        .iter()
        .map(|&d| window_starts(d, patch_size, stride))
        .collect();
    let values = conf.values();

    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; dims.len()];
    loop {
        let window: Vec<(usize, usize)> = choice
            .iter()
            .enumerate()
            .map(|(a, &c)| per_axis[a][c])
            .collect();
        let mean = bounded_mean(window_voxels(&window, &strides).map(|i| values[i]))
            .ok_or(Error::EmptyMap)?;
        best = best.min(mean);

        // odometer over window choices
        let mut axis = dims.len();
        loop {
            if axis == 0 {
                return Ok(best);
            }
            axis -= 1;
            choice[axis] += 1;
            if choice[axis] < per_axis[axis].len() {
                break;
            }
            choice[axis] = 0;
        }
    }
}

/// Flat indices of a box window in C order.
fn window_voxels<'a>(
    window: &'a [(usize, usize)],
    strides: &'a [usize],
) -> impl Iterator<Item = usize> + 'a {
    let total: usize = window.iter().map(|&(_, ext)| ext).product();
    (0..total).map(move |mut k| {
        let mut idx = 0;
        for a in (0..window.len()).rev() {
            let (start, ext) = window[a];
            idx += (start + k % ext) * strides[a];
            k /= ext;
        }
        idx
    })
}

/// Number of face-connected foreground components.
pub fn connected_components(mask: &[bool], dims: &[usize]) -> usize {
    let strides = grid::strides(dims);
    let mut seen = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    let mut count = 0;
    for seed in 0..mask.len() {
        if !mask[seed] || seen[seed] {
            continue;
        }
        count += 1;
        seen[seed] = true;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            grid::for_each_face_neighbor(dims, &strides, i, |j| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            });
        }
    }
    count
}

/// The five heuristic features used by the regression forest scorer.
pub fn simple_features(conf: &ConfidenceMap, pred: &LabelMap, width: usize) -> Result<FeatureVector> {
    conf.check_matches(pred)?;
    let fg = pred.foreground_mask();
    let bg: Vec<bool> = fg.iter().map(|&f| !f).collect();
    let boundary = boundary_mask(pred, width)?;
    let n_fg = fg.iter().filter(|&&f| f).count();
    let values = vec![
        masked_mean(conf, &fg).unwrap_or(EMPTY_REGION_CONFIDENCE),
        masked_mean(conf, &bg).unwrap_or(EMPTY_REGION_CONFIDENCE),
        masked_mean(conf, &boundary).unwrap_or(EMPTY_REGION_CONFIDENCE),
        n_fg as f64 / fg.len() as f64,
        connected_components(&fg, pred.dims()) as f64,
    ];
    FeatureVector::new(
        values,
        SIMPLE_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(dims: Vec<usize>, class_ids: Vec<u32>, data: Vec<u32>) -> LabelMap {
        let sp = vec![1.0; dims.len()];
        LabelMap::exclusive(dims, sp, class_ids, data).unwrap()
    }

    fn conf(dims: Vec<usize>, v: Vec<f64>) -> ConfidenceMap {
        ConfidenceMap::new(dims, v).unwrap()
    }

    fn on(mask: &[bool]) -> Vec<usize> {
        mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    #[test]
    fn boundary_examples() {
        let bg = labels(vec![3, 3], vec![1], vec![0; 9]);
        assert!(on(&boundary_mask(&bg, 4).unwrap()).is_empty());
        let row = labels(vec![1, 6], vec![1], vec![0, 0, 1, 1, 0, 0]);
        assert_eq!(on(&boundary_mask(&row, 1).unwrap()), vec![1, 2, 3, 4]);
        assert_eq!(on(&boundary_mask(&row, 2).unwrap()), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(boundary_mask(&row, 0).unwrap_err().code(), "BAD_WIDTH");
    }

    #[test]
    fn boundary_dilation_is_chebyshev() {
        // single foreground voxel in the centre of a 7x7 grid
        let mut d = vec![0; 49];
        d[24] = 1;
        let m = labels(vec![7, 7], vec![1], d);
        // transitions form a plus shape; width 2 dilates it by a 3x3 box
        assert_eq!(boundary_mask(&m, 1).unwrap().iter().filter(|&&b| b).count(), 5);
        assert_eq!(boundary_mask(&m, 2).unwrap().iter().filter(|&&b| b).count(), 21);
    }

    #[test]
    fn regions_transitions_use_any_channel() {
        let m = LabelMap::regions(
            vec![1, 4],
            vec![1.0, 1.0],
            vec![1, 2],
            vec![vec![true; 4], vec![false, false, true, true]],
        )
        .unwrap();
        assert_eq!(on(&boundary_mask(&m, 1).unwrap()), vec![1, 2]);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(agg_mean(&conf(vec![3, 3], vec![0.7; 9])).unwrap(), 0.7);
        assert_eq!(agg_mean(&conf(vec![1, 4], vec![0.0, 1.0, 0.0, 1.0])).unwrap(), 0.5);
        assert_eq!(agg_mean(&conf(vec![2, 2], vec![0.2, 0.4, 0.6, 0.8])).unwrap(), 0.5);
    }

    #[test]
    fn non_boundary_examples() {
        let c = conf(vec![2, 2], vec![0.2, 0.4, 0.6, 0.8]);
        let bg = labels(vec![2, 2], vec![1], vec![0; 4]);
        assert_eq!(agg_non_boundary(&c, &bg, 4).unwrap(), agg_mean(&c).unwrap());

        // 1x10 row with a foreground block at 4..6: band at width 1 is {3,4,5,6}
        let row = labels(vec![1, 10], vec![1], vec![0, 0, 0, 0, 1, 1, 0, 0, 0, 0]);
        let band = boundary_mask(&row, 1).unwrap();
        let v: Vec<f64> = band.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect();
        assert_eq!(agg_non_boundary(&conf(vec![1, 10], v.clone()), &row, 1).unwrap(), 1.0);

        let all = boundary_mask(&row, 6).unwrap();
        assert!(all.iter().all(|&b| b));
        let cv = conf(vec![1, 10], v);
        assert_eq!(agg_non_boundary(&cv, &row, 6).unwrap(), agg_mean(&cv).unwrap());

        let wrong = labels(vec![2, 5], vec![1], vec![0; 10]);
        assert_eq!(agg_non_boundary(&cv, &wrong, 1).unwrap_err().code(), "DIM_MISMATCH");
    }

    #[test]
    fn mean_foreground_examples() {
        let row = labels(vec![1, 12], vec![1], vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(agg_mean_foreground(&conf(vec![1, 12], vec![0.9; 12]), &row, 1).unwrap(), 0.9);

        let v: Vec<f64> = (0..12).map(|i| if (3..9).contains(&i) { 1.0 } else { 0.0 }).collect();
        let c = conf(vec![1, 12], v);
        assert_eq!(agg_mean_foreground(&c, &row, 1).unwrap(), 1.0);

        let bg = labels(vec![1, 12], vec![1], vec![0; 12]);
        assert_eq!(agg_mean_foreground(&c, &bg, 4).unwrap(), agg_mean(&c).unwrap());

        // band swallows the whole foreground: fall back to all foreground voxels
        let thin = labels(vec![1, 12], vec![1], vec![0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0]);
        let mut v = vec![0.0; 12];
        v[5] = 0.25;
        assert_eq!(agg_mean_foreground(&conf(vec![1, 12], v), &thin, 4).unwrap(), 0.25);
    }

    #[test]
    fn patch_examples() {
        assert_eq!(agg_patch_min(&conf(vec![23, 17], vec![0.6; 391]), 10).unwrap(), 0.6);

        let one: Vec<f64> = (0..100).map(|i| (i % 7) as f64 / 7.0).collect();
        let c = conf(vec![10, 10], one);
        assert_eq!(agg_patch_min(&c, 10).unwrap(), agg_mean(&c).unwrap());

        let mut v = vec![0.9; 20];
        v[5..15].fill(0.1);
        assert_eq!(agg_patch_min(&conf(vec![1, 20], v), 10).unwrap(), 0.1);
        assert_eq!(agg_patch_min(&c, 0).unwrap_err().code(), "BAD_PATCH");
    }

    #[test]
    fn patch_windows_clamp_to_border() {
        assert_eq!(window_starts(20, 10, 5), vec![(0, 10), (5, 10), (10, 10)]);
        assert_eq!(window_starts(23, 10, 5), vec![(0, 10), (5, 10), (10, 10), (13, 10)]);
        assert_eq!(window_starts(7, 10, 5), vec![(0, 7)]);
        assert_eq!(window_starts(3, 1, 1), vec![(0, 1), (1, 1), (2, 1)]);
    }

    #[test]
    fn component_examples() {
        assert_eq!(connected_components(&[false; 9], &[3, 3]), 0);
        assert_eq!(connected_components(&[true; 27], &[3, 3, 3]), 1);
        let diag = [true, false, false, true];
        assert_eq!(connected_components(&diag, &[2, 2]), 2);
    }

    #[test]
    fn simple_feature_examples() {
        let c = conf(vec![4, 4], vec![0.8; 16]);
        let bg = labels(vec![4, 4], vec![1], vec![0; 16]);
        let f = simple_features(&c, &bg, 4).unwrap();
        assert_eq!(f.values(), &[1.0, 0.8, 1.0, 0.0, 0.0]);
        assert_eq!(f.schema(), SIMPLE_FEATURE_NAMES);

        // foreground fills the image as one component made of two classes
        let d: Vec<u32> = (0..16).map(|i| if i < 8 { 1 } else { 2 }).collect();
        let full = labels(vec![4, 4], vec![1, 2], d);
        let f = simple_features(&c, &full, 10).unwrap();
        assert_eq!(f.values(), &[0.8, 1.0, 0.8, 1.0, 1.0]);
        assert_eq!(simple_features(&c, &full, 10).unwrap(), f);
    }

    fn arb_case() -> impl Strategy<Value = (Vec<u32>, Vec<f64>)> {
        (
            proptest::collection::vec(0u32..3, 64),
            proptest::collection::vec(0.0f64..=1.0, 64),
        )
    }

    proptest! {
        #[test]
        fn aggregators_stay_within_voxel_range((d, v) in arb_case(), w in 1usize..5, p in 1usize..6) {
            let pred = labels(vec![8, 8], vec![1, 2], d);
            let c = conf(vec![8, 8], v.clone());
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for k in [
                agg_mean(&c).unwrap(),
                agg_non_boundary(&c, &pred, w).unwrap(),
                agg_mean_foreground(&c, &pred, w).unwrap(),
                agg_patch_min(&c, p).unwrap(),
            ] {
                prop_assert!(lo <= k && k <= hi);
            }
        }

        #[test]
        fn patch_min_bounds(v in proptest::collection::vec(0.0f64..=1.0, 64), p in 1usize..9) {
            let c = conf(vec![8, 8], v);
            let hi = c.values().iter().copied().fold(0.0, f64::max);
            prop_assert!(agg_patch_min(&c, p).unwrap() <= hi);
            // a single window covers the image exactly
            prop_assert!(agg_patch_min(&c, 8).unwrap() <= agg_mean(&c).unwrap());
            // disjoint 4x4 blocks at offsets 0 and 4 tile the image, so their min mean <= mean
            prop_assert!(agg_patch_min(&c, 4).unwrap() <= agg_mean(&c).unwrap() + 1e-12);
        }

        #[test]
        fn uniform_prediction_has_no_band(v in proptest::collection::vec(0.0f64..=1.0, 36), label in 0u32..2, w in 1usize..6) {
            let pred = labels(vec![6, 6], vec![1], vec![label; 36]);
            let c = conf(vec![6, 6], v);
            prop_assert_eq!(agg_non_boundary(&c, &pred, w).unwrap(), agg_mean(&c).unwrap());
        }

        #[test]
        fn band_grows_with_width(d in proptest::collection::vec(0u32..3, 125)) {
            let pred = labels(vec![5, 5, 5], vec![1, 2], d);
            let mut prev = boundary_mask(&pred, 1).unwrap();
            for w in 2..=6 {
                let next = boundary_mask(&pred, w).unwrap();
                prop_assert!(prev.iter().zip(&next).all(|(&a, &b)| !a || b));
                prev = next;
            }
        }

        #[test]
        fn relabelling_classes_changes_nothing((d, v) in arb_case()) {
            let a = labels(vec![8, 8], vec![1, 2], d.clone());
            let swapped: Vec<u32> = d.iter().map(|&l| match l { 1 => 7, 2 => 3, x => x }).collect();
            let b = labels(vec![8, 8], vec![7, 3], swapped);
            let c = conf(vec![8, 8], v);
            prop_assert_eq!(agg_non_boundary(&c, &a, 2).unwrap(), agg_non_boundary(&c, &b, 2).unwrap());
            prop_assert_eq!(agg_mean_foreground(&c, &a, 2).unwrap(), agg_mean_foreground(&c, &b, 2).unwrap());
            let (fa, fb) = (simple_features(&c, &a, 2).unwrap(), simple_features(&c, &b, 2).unwrap());
            prop_assert_eq!(fa.values(), fb.values());
        }
    }
}
