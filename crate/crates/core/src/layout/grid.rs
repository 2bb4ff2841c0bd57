use alloc::vec::Vec;

/// Columns and rows of the square packing for `n` units.
pub fn grid_dims(n: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let mut cols = libm::ceil(libm::sqrt(n as f64)) as usize;
    // Guard against rounding in the square root for large perfect squares.
    while cols * cols < n {
        cols += 1;
    }
    while cols > 1 && (cols - 1) * (cols - 1) >= n {
        cols -= 1;
    }
    (cols, n.div_ceil(cols))
}

/// Row-major square packing: unit `k` sits at `(k mod cols, k div cols)`
/// scaled by `cell`.
pub fn grid_layout(n: usize, cell: f64) -> Vec<(f64, f64)> {
    let (cols, _) = grid_dims(n);
    (0..n)
        .map(|k| ((k % cols) as f64 * cell, (k / cols) as f64 * cell))
        .collect()
}

/// Width over height of the cell-box bounding the grid (`cols` by `rows`
/// cells).
pub fn grid_aspect_ratio(n: usize) -> Option<f64> {
    let (cols, rows) = grid_dims(n);
    if rows == 0 {
        None
    } else {
        Some(cols as f64 / rows as f64)
    }
}
