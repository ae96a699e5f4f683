//! Exact squared Euclidean distance transform on anisotropic grids.
//!
//! Separable lower-envelope-of-parabolas algorithm (Felzenszwalb &
//! Huttenlocher), applied once per axis with that axis' physical spacing.

use crate::grid;

/// Squared physical distance from every voxel to the nearest `true` voxel of
/// `features`. Voxels are `f64::INFINITY` when `features` is empty.
pub fn squared_edt(features: &[bool], dims: &[usize], spacing: &[f64]) -> Vec<f64> {
    let mut dist: Vec<f64> = features
        .iter()
        .map(|&f| if f { 0.0 } else { f64::INFINITY })
        .collect();
    let strides = grid::strides(dims);
    let max_len = dims.iter().copied().max().unwrap_or(0);
    let mut line = vec![0.0; max_len];
    let mut out = vec![0.0; max_len];
    let mut sites = vec![0usize; max_len];
    let mut bounds = vec![0.0; max_len + 1];

    for axis in 0..dims.len() {
        let len = dims[axis];
        let step = strides[axis];
        for start in grid::line_starts(dims, &strides, axis) {
            for (k, v) in line[..len].iter_mut().enumerate() {
                *v = dist[start + k * step];
            }
            transform_line(
                &line[..len],
                spacing[axis],
                &mut out[..len],
                &mut sites,
                &mut bounds,
            );
            for (k, &v) in out[..len].iter().enumerate() {
                dist[start + k * step] = v;
            }
        }
    }
    dist
}

fn transform_line(f: &[f64], h: f64, out: &mut [f64], sites: &mut [usize], bounds: &mut [f64]) {
    let pos = |q: usize| q as f64 * h;
    let mut k: isize = -1;
    for q in 0..f.len() {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                sites[0] = q;
                bounds[0] = f64::NEG_INFINITY;
                bounds[1] = f64::INFINITY;
                break;
            }
            let p = sites[k as usize];
            let s = ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p)))
                / (2.0 * (pos(q) - pos(p)));
            if s <= bounds[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            sites[k as usize] = q;
            bounds[k as usize] = s;
            bounds[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        out.fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while bounds[j + 1] < pos(q) {
            j += 1;
        }
        let p = sites[j];
        let d = (q as f64 - p as f64) * h;
        *o = d * d + f[p];
    }
}
