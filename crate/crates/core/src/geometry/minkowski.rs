//! Minkowski combinations `tA + (1-t)B` of voxel sets.
//!
//! Both scaled inputs are expressed on a common fine lattice of spacing `s`
//! where every scaled cell of `A` spans `p` fine cells and every scaled cell
//! of `B` spans `q`. The sum of two axis-aligned boxes with integer corners is
//! again such a box, so the output is an exact union of fine cells. When the
//! scaled spacings are not commensurable, `(1-t)B` is replaced by an outer
//! cover (for the reported set) and an inner cover (for the certified lower
//! bound), and the gap between the two sums is the reported volume error.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::voxel::{normalize_runs, Run, VoxelSet};

/// Result of a Minkowski combination.
#[derive(Clone, Debug)]
pub struct Combination {
    /// Union of fine cells covering `tA + (1-t)B`.
    pub set: VoxelSet,
    /// `volume(set) - |tA + (1-t)B| <= volume_error`; zero on commensurable grids.
    pub volume_error: f64,
}

/// A row of a set expressed in fine-lattice units: the prefix coordinates span
/// the box `[lo, hi)` and the runs are along the last axis.
struct RowBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
    runs: Vec<Run>,
}

const EPS: f64 = 1e-9;

/// Best rational approximation `p/q` of `x` with `p, q <= limit`.
fn rational_approx(x: f64, limit: i64) -> (i64, i64) {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = x;
    let mut best = (x.round().max(1.0) as i64, 1);
    for _ in 0..64 {
        let a = v.floor() as i64;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if h2 > limit || k2 > limit {
            break;
        }
        best = (h2, k2);
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = v - a as f64;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    best
}

/// Fine-lattice factors `(p, q, s)`, and whether they are exact.
fn common_lattice(sa: f64, sb: f64) -> (i64, i64, f64, bool) {
    let r = sa / sb;
    let (p, q) = rational_approx(r, 4096);
    if ((p as f64 / q as f64) - r).abs() <= 1e-12 * r {
        return (p, q, sa / p as f64, true);
    }
    let (p, q) = rational_approx(r, 64);
    (p, q.max(1), sa / p.max(1) as f64, false)
}

fn exact_boxes(set: &VoxelSet, factor: i64) -> Vec<RowBox> {
    set.rows()
        .iter()
        .map(|(prefix, runs)| RowBox {
            lo: prefix.iter().map(|c| c * factor).collect(),
            hi: prefix.iter().map(|c| c * factor + factor).collect(),
            runs: runs.iter().map(|(s, e)| (s * factor, e * factor)).collect(),
        })
        .collect()
}

/// Covers of `set` scaled so that one cell spans `ratio` fine cells.
/// `outer` grows every box to lattice lines, otherwise boxes shrink.
fn resampled_boxes(set: &VoxelSet, ratio: f64, outer: bool) -> Vec<RowBox> {
    let down = |x: f64| (x * ratio + EPS).floor() as i64;
    let up = |x: f64| (x * ratio - EPS).ceil() as i64;
    let mut out = Vec::new();
    for (prefix, runs) in set.rows() {
        let (lo, hi): (Vec<i64>, Vec<i64>) = if outer {
            (
                prefix.iter().map(|&c| down(c as f64)).collect(),
                prefix.iter().map(|&c| up(c as f64 + 1.0)).collect(),
            )
        } else {
            (
                prefix.iter().map(|&c| up(c as f64)).collect(),
                prefix.iter().map(|&c| down(c as f64 + 1.0)).collect(),
            )
        };
        if lo.iter().zip(&hi).any(|(l, h)| h <= l) {
            continue;
        }
        let runs: Vec<Run> = runs
            .iter()
            .map(|&(s, e)| {
                if outer {
                    (down(s as f64), up(e as f64))
                } else {
                    (up(s as f64), down(e as f64))
                }
            })
            .filter(|(s, e)| e > s)
            .collect();
        if !runs.is_empty() {
            out.push(RowBox { lo, hi, runs });
        }
    }
    out
}

/// Rasterize the union of pairwise box sums onto the fine lattice.
fn sum_boxes(xs: &[RowBox], ys: &[RowBox], dim: usize) -> BTreeMap<Vec<i64>, Vec<Run>> {
    let m = dim - 1;
    if xs.is_empty() || ys.is_empty() {
        return BTreeMap::new();
    }
    // dense prefix table over the output bounding box
    let mut lo = vec![i64::MAX; m];
    let mut hi = vec![i64::MIN; m];
    for k in 0..m {
        let (xl, xh) = xs.iter().fold((i64::MAX, i64::MIN), |acc, b| (acc.0.min(b.lo[k]), acc.1.max(b.hi[k])));
        let (yl, yh) = ys.iter().fold((i64::MAX, i64::MIN), |acc, b| (acc.0.min(b.lo[k]), acc.1.max(b.hi[k])));
        lo[k] = xl + yl;
        hi[k] = xh + yh;
    }
    let extents: Vec<usize> = (0..m).map(|k| (hi[k] - lo[k]) as usize).collect();
    let total: usize = extents.iter().product();
    let mut table: Vec<Vec<Run>> = vec![Vec::new(); total.max(1)];

    let mut cursor = vec![0i64; m];
    for x in xs {
        for y in ys {
            let blo: Vec<i64> = (0..m).map(|k| x.lo[k] + y.lo[k]).collect();
            let bhi: Vec<i64> = (0..m).map(|k| x.hi[k] + y.hi[k]).collect();
            let mut sums: Vec<Run> = Vec::with_capacity(x.runs.len() * y.runs.len());
            for rx in &x.runs {
                for ry in &y.runs {
                    sums.push((rx.0 + ry.0, rx.1 + ry.1));
                }
            }
            normalize_runs(&mut sums);
            cursor.copy_from_slice(&blo);
            loop {
                let mut idx = 0usize;
                for k in 0..m {
                    idx = idx * extents[k] + (cursor[k] - lo[k]) as usize;
                }
                let row = &mut table[idx];
                row.extend_from_slice(&sums);
                if row.len() > 32 {
                    normalize_runs(row);
                }
                let mut k = m;
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    cursor[k] += 1;
                    if cursor[k] < bhi[k] {
                        break;
                    }
                    cursor[k] = blo[k];
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if k == usize::MAX || m == 0 {
                    break;
                }
            }
        }
    }

    let mut rows = BTreeMap::new();
    for (idx, mut runs) in table.into_iter().enumerate() {
        if runs.is_empty() {
            continue;
        }
        normalize_runs(&mut runs);
        let mut prefix = vec![0i64; m];
        let mut rem = idx;
        for k in (0..m).rev() {
            prefix[k] = lo[k] + (rem % extents[k]) as i64;
            rem /= extents[k];
        }
        rows.insert(prefix, runs);
    }
    rows
}

/// `tA + (1-t)B` as a union of cells covering the exact combination.
pub fn minkowski_combine(a: &VoxelSet, b: &VoxelSet, t: f64) -> Result<Combination> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must lie in (0, 1]")));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = a.dim();
    if t == 1.0 {
        return Ok(Combination { set: a.clone(), volume_error: 0.0 });
    }
    let sa = t * a.spacing();
    let sb = (1.0 - t) * b.spacing();
    let origin: Vec<f64> = a
        .origin()
        .iter()
        .zip(b.origin())
        .map(|(oa, ob)| t * oa + (1.0 - t) * ob)
        .collect();
    let (p, q, s, exact) = common_lattice(sa, sb);
    let xa = exact_boxes(a, p);
    if exact {
        let rows = sum_boxes(&xa, &exact_boxes(b, q), dim);
        return Ok(Combination { set: VoxelSet::from_rows(dim, s, origin, rows), volume_error: 0.0 });
    }
    let ratio = sb / s;
    let outer = sum_boxes(&xa, &resampled_boxes(b, ratio, true), dim);
    let inner = sum_boxes(&xa, &resampled_boxes(b, ratio, false), dim);
    let set = VoxelSet::from_rows(dim, s, origin.clone(), outer);
    let lower = VoxelSet::from_rows(dim, s, origin, inner);
    Ok(Combination { volume_error: set.volume() - lower.volume(), set })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn union_1d(h: f64, intervals: &[(f64, f64)]) -> VoxelSet {
        let mut cells = Vec::new();
        for &(a, b) in intervals {
            let (i0, i1) = ((a / h).round() as i64, (b / h).round() as i64);
            cells.extend((i0..i1).map(|c| vec![c]));
        }
        VoxelSet::from_cells(1, h, vec![0.0], cells).unwrap()
    }

    /// Interval-arithmetic oracle for `tA + (1-t)B` in one dimension.
    fn oracle_1d(a: &[(f64, f64)], b: &[(f64, f64)], t: f64) -> f64 {
        let mut sums: Vec<(f64, f64)> = Vec::new();
        for &(a0, a1) in a {
            for &(b0, b1) in b {
                sums.push((t * a0 + (1.0 - t) * b0, t * a1 + (1.0 - t) * b1));
            }
        }
        sums.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut total = 0.0;
        let mut cur = sums[0];
        for &(s, e) in &sums[1..] {
            if s <= cur.1 {
                cur.1 = cur.1.max(e);
            } else {
                total += cur.1 - cur.0;
                cur = (s, e);
            }
        }
        total + cur.1 - cur.0
    }

    #[test]
    fn rational_approximation() {
        assert_eq!(rational_approx(1.0 / 3.0, 100), (1, 3));
        assert_eq!(rational_approx(1.0, 100), (1, 1));
        assert_eq!(rational_approx(0.1 / 0.9, 100), (1, 9));
    }

    #[test]
    fn equal_squares_at_half() {
        let cells = (0..10).flat_map(|i| (0..10).map(move |j| vec![i, j]));
        let sq = VoxelSet::from_cells(2, 0.1, vec![0.0, 0.0], cells).unwrap();
        let c = minkowski_combine(&sq, &sq, 0.5).unwrap();
        assert_eq!(c.volume_error, 0.0);
        assert!((c.set.volume() - 1.0).abs() <= 2.0 * 0.1);
        assert!((c.set.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_and_split_interval() {
        let h = 1e-3;
        let a = [(0.0, 2.0)];
        let b = [(0.0, 1.0), (2.0, 3.0)];
        let c = minkowski_combine(&union_1d(h, &a), &union_1d(h, &b), 0.5).unwrap();
        let expected = oracle_1d(&a, &b, 0.5);
        assert!((expected - 2.5).abs() < 1e-12);
        assert!((c.set.volume() - expected).abs() <= 4.0 * h);
    }

    #[test]
    fn far_apart_intervals_land_in_the_middle() {
        let h = 1e-3;
        let c = minkowski_combine(&union_1d(h, &[(0.0, 1.0)]), &union_1d(h, &[(5.0, 6.0)]), 0.5).unwrap();
        assert!((c.set.volume() - 1.0).abs() <= 2.0 * h);
        let (lo, hi) = c.set.bounding_box().unwrap();
        let s = c.set.spacing();
        let (x0, x1) = (c.set.origin()[0] + s * lo[0] as f64, c.set.origin()[0] + s * hi[0] as f64);
        assert!(x0 >= 2.5 - 1e-9 && x1 <= 3.5 + 1e-9);
    }

    #[test]
    fn t_one_returns_a() {
        let a = union_1d(0.5, &[(0.0, 1.0)]);
        let b = union_1d(0.5, &[(3.0, 9.0)]);
        assert_eq!(minkowski_combine(&a, &b, 1.0).unwrap().set, a);
    }

    #[test]
    fn errors() {
        let a = union_1d(0.5, &[(0.0, 1.0)]);
        let b2 = VoxelSet::from_cells(2, 0.5, vec![0.0, 0.0], vec![vec![0, 0]]).unwrap();
        assert!(matches!(minkowski_combine(&a, &b2, 0.5), Err(Error::DimensionMismatch { .. })));
        assert!(minkowski_combine(&a, &a, 0.0).is_err());
        assert!(minkowski_combine(&a, &a, 1.5).is_err());
    }

    #[test]
    fn uneven_weights_match_oracle() {
        let h = 1e-2;
        let a = [(0.0, 0.5), (0.7, 1.2)];
        let b = [(0.1, 0.4), (1.0, 1.7)];
        for t in [0.25, 0.1, 0.3] {
            let c = minkowski_combine(&union_1d(h, &a), &union_1d(h, &b), t).unwrap();
            assert_eq!(c.volume_error, 0.0);
            assert!((c.set.volume() - oracle_1d(&a, &b, t)).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn incommensurable_grids_bracket_the_oracle() {
        let a = [(0.0, 1.0)];
        let b = [(0.0, 0.7), (1.4, 2.1)];
        let sa = union_1d(0.1, &a);
        let sb = VoxelSet::from_cells(1, 0.07, vec![0.0], (0..10).chain(20..30).map(|c| vec![c])).unwrap();
        let t = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        let c = minkowski_combine(&sa, &sb, t).unwrap();
        let exact = oracle_1d(&a, &b, t);
        assert!(c.volume_error > 0.0);
        assert!(c.set.volume() >= exact - 1e-9);
        assert!(c.set.volume() - c.volume_error <= exact + 1e-9);
    }

    #[test]
    fn two_dimensional_l_shape_half_sum() {
        // L + L is the union of the 2x2 blocks at key sums (0,0), (1,0), (2,0),
        // (0,1), (1,1), (0,2): rows of 4, 4, 3 and 2 unit cells, scaled by 1/4.
        let l: Vec<Vec<i64>> = vec![vec![0, 0], vec![1, 0], vec![0, 1]];
        let s = VoxelSet::from_cells(2, 1.0, vec![0.0, 0.0], l).unwrap();
        let c = minkowski_combine(&s, &s, 0.5).unwrap();
        assert!((c.set.volume() - 13.0 / 4.0).abs() < 1e-12);
    }
}
