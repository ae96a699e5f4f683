//! Index arithmetic over flat C-order voxel grids.

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

pub(crate) fn coord(dims: &[usize], strides: &[usize], idx: usize, axis: usize) -> usize {
    (idx / strides[axis]) % dims[axis]
}

/// Calls `f` with every in-bounds face neighbour of `idx`.
pub(crate) fn for_each_face_neighbor(
    dims: &[usize],
    strides: &[usize],
    idx: usize,
    mut f: impl FnMut(usize),
) {
    for axis in 0..dims.len() {
        let c = coord(dims, strides, idx, axis);
        if c > 0 {
            f(idx - strides[axis]);
        }
        if c + 1 < dims[axis] {
            f(idx + strides[axis]);
        }
    }
}

pub(crate) fn on_border(dims: &[usize], strides: &[usize], idx: usize) -> bool {
    (0..dims.len()).any(|axis| {
        let c = coord(dims, strides, idx, axis);
        c == 0 || c + 1 == dims[axis]
    })
}

/// Start indices of every 1D line running along `axis`.
pub(crate) fn line_starts(dims: &[usize], strides: &[usize], axis: usize) -> Vec<usize> {
    let n: usize = dims.iter().product();
    (0..n)
        .filter(|&i| coord(dims, strides, i, axis) == 0)
        .collect()
}
