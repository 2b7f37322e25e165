//! Hulls of voxel sets, hull gaps and Brunn-Minkowski deficits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::hull::monotone_chain;
use crate::geometry::linalg::Point;
use crate::geometry::minkowski::minkowski_combine;
use crate::geometry::polytope::Polytope;
use crate::geometry::voxel::VoxelSet;

/// A measured quantity with an absolute error bar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub grid_error: f64,
}

impl Measured {
    pub fn lower(&self) -> f64 {
        self.value - self.grid_error
    }

    pub fn upper(&self) -> f64 {
        self.value + self.grid_error
    }
}

/// Relative tolerance on `|A| = |B|` for deficit computations.
pub const VOLUME_TOLERANCE: f64 = 1e-9;

/// Convex hull of the union of cells.
pub fn convex_hull(x: &VoxelSet) -> Result<Polytope> {
    if x.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = x.dim();
    let corners = x.hull_candidate_corners();
    // hull in lattice units first, where the planar chain is exact
    let extreme: Vec<Point> = match dim {
        2 => monotone_chain(&corners).into_iter().map(|i| corners[i].clone()).collect(),
        _ => Polytope::from_vertices(dim, corners)?.vertices().to_vec(),
    };
    let h = x.spacing();
    let world = extreme
        .iter()
        .map(|p| p.iter().zip(x.origin()).map(|(c, o)| o + h * c).collect())
        .collect();
    Polytope::from_vertices(dim, world)
}

/// `(|co(A)| - |A|) / |A|`. The error bar `h * |∂co(A)| / |A|` bounds how far
/// the value can move when the underlying set is re-voxelized at spacing `h`.
pub fn hull_gap(a: &VoxelSet) -> Result<Measured> {
    let hull = convex_hull(a)?;
    let va = a.volume();
    Ok(Measured {
        value: ((hull.volume() - va) / va).max(0.0),
        grid_error: a.spacing() * hull.surface_area() / va,
    })
}

/// `δ = |tA + (1-t)B| / |A| - 1` for sets of equal volume, with `t ∈ (0, 1/2]`.
///
/// The value is exact for the voxel sets themselves (up to the certified
/// resampling gap on incommensurable grids). The error bar adds the staircase
/// term `h (|∂co A| + |∂co B|) / (2|A|)`: a voxelized convex body is not
/// convex, and its self-combination exceeds it by at most that much.
pub fn bm_deficit(a: &VoxelSet, b: &VoxelSet, t: f64) -> Result<Measured> {
    if !(t > 0.0 && t <= 0.5) {
        return Err(Error::InvalidParameter(format!("t = {t} must lie in (0, 1/2]")));
    }
    let (va, vb) = (a.volume(), b.volume());
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    if (va - vb).abs() > VOLUME_TOLERANCE * va {
        return Err(Error::VolumeMismatch { a: va, b: vb });
    }
    let sum = minkowski_combine(a, b, t)?;
    let staircase = 0.5
        * (a.spacing() * convex_hull(a)?.surface_area() + b.spacing() * convex_hull(b)?.surface_area())
        / va;
    Ok(Measured {
        value: sum.set.volume() / va - 1.0,
        grid_error: sum.volume_error / va + staircase + VOLUME_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cells_1d(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
        ranges.iter().flat_map(|&(a, b)| (a..b).map(|c| vec![c])).collect()
    }

    fn l_shape() -> VoxelSet {
        VoxelSet::from_cells(2, 1.0, vec![0.0, 0.0], vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap()
    }

    /// Brute-force planar hull area: keep the points outside every triangle of
    /// the others, sort them by angle and apply the shoelace formula.
    fn brute_hull_area(points: &[Point]) -> f64 {
        let mut area = 0.0f64;
        let inside = |p: &Point, a: &Point, b: &Point, c: &Point| {
            let s = |u: &Point, v: &Point, w: &Point| (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0]);
            let (d1, d2, d3) = (s(a, b, p), s(b, c, p), s(c, a, p));
            !((d1 < 0.0 || d2 < 0.0 || d3 < 0.0) && (d1 > 0.0 || d2 > 0.0 || d3 > 0.0))
        };
        let mut hull: Vec<Point> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let mut interior = false;
            for a in 0..points.len() {
                for b in 0..points.len() {
                    for c in 0..points.len() {
                        if [a, b, c].contains(&i) || a == b || b == c || a == c {
                            continue;
                        }
                        if points[a] != *p && points[b] != *p && points[c] != *p && inside(p, &points[a], &points[b], &points[c]) {
                            interior = true;
                        }
                    }
                }
            }
            if !interior && !hull.contains(p) {
                hull.push(p.clone());
            }
        }
        let cx = hull.iter().map(|p| p[0]).sum::<f64>() / hull.len() as f64;
        let cy = hull.iter().map(|p| p[1]).sum::<f64>() / hull.len() as f64;
        hull.sort_by(|p, q| (p[1] - cy).atan2(p[0] - cx).partial_cmp(&(q[1] - cy).atan2(q[0] - cx)).unwrap());
        for i in 0..hull.len() {
            let (a, b) = (&hull[i], &hull[(i + 1) % hull.len()]);
            area += 0.5 * (a[0] * b[1] - a[1] * b[0]);
        }
        area
    }

    #[test]
    fn hull_of_two_cells_is_segment() {
        let x = VoxelSet::from_cells(1, 1.0, vec![0.0], vec![vec![0], vec![9]]).unwrap();
        let h = convex_hull(&x).unwrap();
        assert_eq!(h.vertices(), &[vec![0.0], vec![10.0]]);
    }

    #[test]
    fn l_shape_hull_is_pentagon() {
        let h = convex_hull(&l_shape()).unwrap();
        assert_eq!(h.vertices().len(), 5);
        let corners: Vec<Point> = vec![
            vec![0.0, 0.0], vec![2.0, 0.0], vec![2.0, 1.0], vec![1.0, 1.0],
            vec![1.0, 2.0], vec![0.0, 2.0], vec![0.0, 1.0], vec![1.0, 0.0],
        ];
        let oracle = brute_hull_area(&corners);
        assert!((oracle - 3.5).abs() < 1e-12);
        assert!((h.volume() - oracle).abs() < 1e-12);
        let g = hull_gap(&l_shape()).unwrap();
        assert!((g.value - 0.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gap_of_split_interval() {
        let h = 1e-3;
        let b = VoxelSet::from_cells(1, h, vec![0.0], cells_1d(&[(0, 1000), (2000, 3000)])).unwrap();
        let g = hull_gap(&b).unwrap();
        assert!((g.value - 0.5).abs() <= 2.0 * h);
        assert!(g.grid_error <= 2.0 * h);
    }

    #[test]
    fn convex_voxel_ball_hull_dominates() {
        for dim in 2..=3 {
            let r = 8i64;
            let lo = vec![-r; dim];
            let hi = vec![r; dim];
            let x = VoxelSet::from_predicate(1.0, vec![0.0; dim], &lo, &hi, |p| {
                p.iter().map(|c| c * c).sum::<f64>() <= (r * r) as f64
            })
            .unwrap();
            let hull = convex_hull(&x).unwrap();
            assert!(hull.volume() >= x.volume());
            for c in x.cells() {
                for mask in 0..(1 << dim) {
                    let corner: Point = (0..dim).map(|k| (c[k] + (mask >> k & 1)) as f64).collect();
                    assert!(hull.contains(&corner, 1e-9));
                }
            }
        }
    }

    #[test]
    fn deficit_examples() {
        let sq = VoxelSet::from_cells(2, 0.1, vec![0.0, 0.0], (0..10).flat_map(|i| (0..10).map(move |j| vec![i, j]))).unwrap();
        let d = bm_deficit(&sq, &sq, 0.5).unwrap();
        assert!(d.value.abs() <= d.grid_error);

        let h = 1e-3;
        let a = VoxelSet::from_cells(1, h, vec![0.0], cells_1d(&[(0, 2000)])).unwrap();
        let b = VoxelSet::from_cells(1, h, vec![0.0], cells_1d(&[(0, 1000), (2000, 3000)])).unwrap();
        let d = bm_deficit(&a, &b, 0.5).unwrap();
        assert!((d.value - 0.25).abs() <= 2.0 * h);

        let disc = VoxelSet::from_predicate(0.05, vec![0.0, 0.0], &[-25, -25], &[25, 25], |p| {
            p[0] * p[0] + p[1] * p[1] <= 1.0
        })
        .unwrap();
        let moved = disc.translate(&[0.3, -0.7]);
        let d = bm_deficit(&disc, &moved, 0.5).unwrap();
        assert!(d.value.abs() <= d.grid_error + 1e-12);

        let small = VoxelSet::from_cells(1, h, vec![0.0], cells_1d(&[(0, 10)])).unwrap();
        assert!(matches!(bm_deficit(&a, &small, 0.5), Err(Error::VolumeMismatch { .. })));
        assert!(bm_deficit(&a, &a, 0.75).is_err());
    }

    #[test]
    fn lattice_translation_invariance_and_nonnegativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..=3usize);
            let mk = |rng: &mut ChaCha8Rng| {
                let mut cells = Vec::new();
                while cells.len() < 12 {
                    let side = if n == 1 { 40 } else { 5 };
                    let c: Vec<i64> = (0..n).map(|_| rng.random_range(0..side)).collect();
                    if !cells.contains(&c) {
                        cells.push(c);
                    }
                }
                VoxelSet::from_cells(n, 1.0, vec![0.0; n], cells).unwrap()
            };
            let (a, b) = (mk(&mut rng), mk(&mut rng));
            let t = [0.5, 0.25, 0.2][rng.random_range(0..3)];
            let d = bm_deficit(&a, &b, t).unwrap();
            assert!(d.value >= -d.grid_error);
            let shift: Vec<i64> = (0..n).map(|_| rng.random_range(-3..4)).collect();
            let d2 = bm_deficit(&a, &b.translate_cells(&shift), t).unwrap();
            assert_eq!(d.value, d2.value);
        }
    }
}
