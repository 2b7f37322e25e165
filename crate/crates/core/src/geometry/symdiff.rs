//! Translation search minimising the symmetric difference of two voxel sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::Point;
use crate::geometry::voxel::VoxelSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestTranslation {
    /// `x` such that `|(A + x) △ B|` is the reported value.
    pub translation: Point,
    pub value: f64,
    /// `|(A + x0) △ B|` at the centroid-aligned start `x0`.
    pub start_value: f64,
}

/// Best lattice translation of `a` against `b`.
///
/// Sets on different lattices are compared after resampling `b` onto the
/// lattice of `a`. The search aligns centroids, then scans shift windows
/// at three spacings refined by a factor of four, and finishes with descent
/// over the `3^n - 1` lattice neighbours. The value is the exact symmetric
/// difference at the returned translation; it is not certified globally
/// minimal.
pub fn sym_diff_min_translation(a: &VoxelSet, b: &VoxelSet) -> Result<BestTranslation> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = a.dim();
    let h = a.spacing();
    let b = a.resample_onto(b);
    let total = a.cell_count() + b.cell_count();
    let value_of = |shift: &[i64]| total - 2 * b.overlap_count(a, shift);

    let (ca, cb) = (a.centroid().expect("nonempty"), b.centroid().expect("nonempty"));
    let start: Vec<i64> = ca.iter().zip(&cb).map(|(x, y)| ((y - x) / h).round() as i64).collect();
    let start_cells = value_of(&start);

    let (lo, hi) = a.bounding_box().expect("nonempty");
    let extent = lo.iter().zip(&hi).map(|(l, u)| u - l).max().unwrap_or(1).max(1);
    let coarse = (extent / 8).max(1);
    let mut best = (start_cells, start.clone());
    for step in [coarse, (coarse / 4).max(1), (coarse / 16).max(1)] {
        let center = best.1.clone();
        for_each_offset(dim, 4, |off| {
            let shift: Vec<i64> = center.iter().zip(off).map(|(c, o)| c + step * o).collect();
            let v = value_of(&shift);
            if v < best.0 {
                best = (v, shift);
            }
        });
    }
    loop {
        let center = best.1.clone();
        let before = best.0;
        for_each_offset(dim, 1, |off| {
            let shift: Vec<i64> = center.iter().zip(off).map(|(c, o)| c + o).collect();
            let v = value_of(&shift);
            if v < best.0 {
                best = (v, shift);
            }
        });
        if best.0 == before {
            break;
        }
    }
    let cell = a.cell_volume();
    Ok(BestTranslation {
        translation: best.1.iter().map(|s| *s as f64 * h).collect(),
        value: best.0 as f64 * cell,
        start_value: start_cells as f64 * cell,
    })
}

/// Visit every offset in `{-r, ..., r}^dim` except the zero vector.
fn for_each_offset<F: FnMut(&[i64])>(dim: usize, r: i64, mut visit: F) {
    let mut off = vec![-r; dim];
    loop {
        if off.iter().any(|&o| o != 0) {
            visit(&off);
        }
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            off[k] += 1;
            if off[k] <= r {
                break;
            }
            off[k] = -r;
            k += 1;
        }
    }
}
