//! Sandwich certificates and bounded positioning.
//!
//! `X, Y` form an `η`-sandwich when some convex `P` with `o ∈ P` satisfies
//! `P ⊂ X, Y ⊂ (1+η)P`, and they are `λ`-bounded when `rS ⊂ X, Y ⊂ λrS`
//! for the frame simplex `S` and some `r > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::affine::AffineMap;
use crate::geometry::deficit::convex_hull;
use crate::geometry::linalg::{centroid, simplex_measure, sub, Point};
use crate::geometry::polytope::Polytope;
use crate::geometry::voxel::VoxelSet;
use crate::reduction::containment::{grid_slack, voxels_in_polytope};
use crate::reduction::simplex::regular_simplex;

#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub holds: bool,
    /// The witness `P` when one was found (also returned on a failed outer test).
    pub polytope: Option<Polytope>,
    /// Factor applied to the common center hull to fit inside both sets.
    pub scale: f64,
    /// Largest facet excess of a cell center of `X` or `Y` over `(1+η)P`.
    pub outer_excess: f64,
    pub reason: Option<String>,
}

impl SandwichReport {
    fn fail(reason: &str) -> Self {
        Self { holds: false, polytope: None, scale: 0.0, outer_excess: f64::INFINITY, reason: Some(reason.into()) }
    }
}

/// Lattice boxes of `x`'s grid covering a polytope, visited cell by cell.
fn for_each_lattice_cell<F: FnMut(&[i64])>(x: &VoxelSet, p: &Polytope, mut visit: F) {
    let (lo, hi) = p.bounding_box();
    let h = x.spacing();
    let dim = x.dim();
    let lo: Vec<i64> = (0..dim).map(|k| ((lo[k] - x.origin()[k]) / h).floor() as i64).collect();
    let hi: Vec<i64> = (0..dim).map(|k| ((hi[k] - x.origin()[k]) / h).ceil() as i64).collect();
    let mut c = lo.clone();
    loop {
        visit(&c);
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            c[k] += 1;
            if c[k] <= hi[k] {
                break;
            }
            c[k] = lo[k];
            k += 1;
        }
    }
}

/// Search for a sandwich witness and test it on the grid of `x`.
///
/// Hulls are taken over cell centers, which is the hull at grid resolution.
/// The candidate is `P = s (co(X) ∩ co(Y))` with the largest `s ≤ 1` such
/// that every lattice center in `P` belongs to both sets; that `s` is the
/// smallest gauge of an offending center, so no bisection is needed. The
/// outer containment `X, Y ⊂ (1+η)P` uses the grid slack `h√n`.
pub fn sandwich_check(x: &VoxelSet, y: &VoxelSet, eta: f64) -> SandwichReport {
    if x.dim() != y.dim() {
        return SandwichReport::fail("dimension mismatch");
    }
    if x.is_empty() || y.is_empty() {
        return SandwichReport::fail("empty set");
    }
    if !(eta >= 0.0) {
        return SandwichReport::fail("η must be nonnegative");
    }
    let y = x.resample_onto(y);
    let center_hull = |v: &VoxelSet| Polytope::from_vertices(v.dim(), v.extreme_centers());
    let (Ok(hx), Ok(hy)) = (center_hull(x), center_hull(&y)) else {
        return SandwichReport::fail("hull computation failed");
    };
    if !hx.is_full_dimensional() || !hy.is_full_dimensional() {
        return SandwichReport::fail("sets have empty interior");
    }
    let origin = vec![0.0; x.dim()];
    if hx.inradius_about(&origin) <= 0.0 || hy.inradius_about(&origin) <= 0.0 {
        return SandwichReport::fail("origin is not interior to both hulls");
    }
    let Ok(core) = hx.intersection(&hy) else {
        return SandwichReport::fail("hulls do not intersect");
    };
    let Ok(_) = core.gauge(&origin) else {
        return SandwichReport::fail("origin is not interior to the common hull");
    };
    let mut s: f64 = 1.0;
    for_each_lattice_cell(x, &core, |c| {
        let g = core.gauge(&x.cell_center(c)).expect("origin interior");
        if g < s && !(x.contains_cell(c) && y.contains_cell(c)) {
            s = g;
        }
    });
    let s = s * (1.0 - 1e-9);
    if s <= 0.0 {
        return SandwichReport::fail("origin cell is not shared");
    }
    let p = core.scale_about(&origin, s);
    let outer = p.scale_about(&origin, 1.0 + eta);
    let (ex, ey) = (voxels_in_polytope(x, &outer), voxels_in_polytope(&y, &outer));
    let holds = ex.fraction == 0.0 && ey.fraction == 0.0;
    SandwichReport {
        holds,
        outer_excess: ex.worst.max(ey.worst),
        reason: (!holds).then(|| format!("outer containment fails beyond slack {}", grid_slack(x))),
        polytope: Some(p),
        scale: s,
    }
}

/// Outcome of positioning a sandwich pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundedReport {
    /// Largest `r` (to `1e-9` relative) with `rS ⊂ m(X), m(Y)` on the sample lattice.
    pub r: f64,
    /// `max gauge_S(m(v)) / r` over hull vertices `v` of `X` and `Y`.
    pub lambda: f64,
    /// The target `n² + n³η`.
    pub lambda_target: f64,
    /// `nη`.
    pub eta_out: f64,
    pub bounded: bool,
    /// Whether `m(X), m(Y)` is an `nη`-sandwich with witness `m(P)`.
    pub sandwich: bool,
    pub holds: bool,
    /// Vertices of the witness `m(P)`.
    pub witness: Vec<Point>,
}

/// Barycentric lattice of the frame simplex: all `Σ (b_i / k) e_i`.
fn simplex_samples(frame: &[Point], k: usize) -> Vec<Point> {
    let dim = frame[0].len();
    let mut out = Vec::new();
    let mut b = vec![0usize; frame.len()];
    fn rec(i: usize, left: usize, b: &mut Vec<usize>, frame: &[Point], k: usize, dim: usize, out: &mut Vec<Point>) {
        if i + 1 == b.len() {
            b[i] = left;
            let mut p = vec![0.0; dim];
            for (w, v) in b.iter().zip(frame) {
                for d in 0..dim {
                    p[d] += *w as f64 / k as f64 * v[d];
                }
            }
            out.push(p);
            return;
        }
        for c in 0..=left {
            b[i] = c;
            rec(i + 1, left - c, b, frame, k, dim, out);
        }
    }
    rec(0, k, &mut b, frame, k, dim, &mut out);
    out
}

/// Verify the postcondition of positioning for a given map.
pub fn check_bounded_position(
    x: &VoxelSet,
    y: &VoxelSet,
    p: &Polytope,
    map: &AffineMap,
    eta: f64,
) -> Result<BoundedReport> {
    let dim = x.dim();
    let n = dim as f64;
    let frame = regular_simplex(dim)?;
    let s = frame.polytope();
    let inv = map.inverse()?;
    let y = x.resample_onto(y);
    let tol = 1e-9 * x.spacing();

    let samples = simplex_samples(&frame.vertices, 8);
    let fits = |r: f64| {
        samples.iter().all(|q| {
            let pre = inv.apply(&q.iter().map(|c| r * c).collect::<Point>());
            x.contains_point_closed(&pre, tol) && y.contains_point_closed(&pre, tol)
        })
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while fits(hi) && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = lo;

    let mut lambda: f64 = 0.0;
    for set in [x, &y] {
        for v in convex_hull(set)?.vertices() {
            lambda = lambda.max(s.gauge(&map.apply(v))?);
        }
    }
    let lambda = if r > 0.0 { lambda / r } else { f64::INFINITY };
    let lambda_target = n * n + n * n * n * eta;
    let bounded = r > 0.0 && lambda <= lambda_target * (1.0 + 1e-6);

    // sandwich about the new origin, tested in the original coordinates
    let eta_out = n * eta;
    let center = inv.apply(&vec![0.0; dim]);
    let sandwich = p.inradius_about(&center) > 0.0 && {
        let outer = p.scale_about(&center, 1.0 + eta_out);
        voxels_in_polytope(x, &outer).fraction == 0.0 && voxels_in_polytope(&y, &outer).fraction == 0.0
    };
    let witness = map.map_polytope(p)?.vertices().to_vec();
    Ok(BoundedReport { r, lambda, lambda_target, eta_out, bounded, sandwich, holds: bounded && sandwich, witness })
}

/// Greedy maximum-volume simplex on a point set: start from the farthest
/// pair, add the point maximising the simplex measure, then improve by
/// single-vertex swaps.
pub fn greedy_max_simplex(points: &[Point]) -> Result<Vec<Point>> {
    let dim = points.first().ok_or(Error::EmptySet)?.len();
    let c = centroid(points);
    let first = (0..points.len())
        .max_by(|&a, &b| crate::geometry::linalg::dist(&points[a], &c).total_cmp(&crate::geometry::linalg::dist(&points[b], &c)))
        .expect("nonempty");
    let mut chosen = vec![first];
    while chosen.len() <= dim {
        let best = (0..points.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| {
                let mut s: Vec<Point> = chosen.iter().map(|&j| points[j].clone()).collect();
                s.push(points[i].clone());
                (simplex_measure(&s), i)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| Error::Degenerate("too few points for a simplex".into()))?;
        if best.0 <= 0.0 {
            return Err(Error::Degenerate("points are affinely dependent".into()));
        }
        chosen.push(best.1);
    }
    let volume = |idx: &[usize]| simplex_measure(&idx.iter().map(|&j| points[j].clone()).collect::<Vec<_>>());
    let mut current = volume(&chosen);
    for _ in 0..50 {
        let mut improved = false;
        for slot in 0..chosen.len() {
            for i in 0..points.len() {
                if chosen.contains(&i) {
                    continue;
                }
                let mut trial = chosen.clone();
                trial[slot] = i;
                let v = volume(&trial);
                if v > current * (1.0 + 1e-12) {
                    chosen = trial;
                    current = v;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(chosen.into_iter().map(|j| points[j].clone()).collect())
}

/// Affine map sending the simplex `w_0..w_n` onto the frame vertices `e_0..e_n`.
pub fn simplex_to_frame(w: &[Point], frame: &[Point]) -> Result<AffineMap> {
    let dim = frame[0].len();
    // M (w_i - w_0) = e_i - e_0 for i = 1..n
    let dw: Vec<Point> = w[1..].iter().map(|p| sub(p, &w[0])).collect();
    let de: Vec<Point> = frame[1..].iter().map(|p| sub(p, &frame[0])).collect();
    let wm = nalgebra::DMatrix::from_fn(dim, dim, |i, j| dw[j][i]);
    let em = nalgebra::DMatrix::from_fn(dim, dim, |i, j| de[j][i]);
    let winv = wm.try_inverse().ok_or_else(|| Error::Degenerate("flat simplex".into()))?;
    let m = em * winv;
    let matrix: Vec<Point> = (0..dim).map(|i| (0..dim).map(|j| m[(i, j)]).collect()).collect();
    let lin = AffineMap::linear(matrix);
    let mw0 = lin.apply(&w[0]);
    let offset = sub(&frame[0], &mw0);
    Ok(AffineMap { offset, ..lin })
}

/// Position an `η`-sandwich pair so that it becomes `(n² + n³η)`-bounded.
///
/// A maximum-volume simplex inscribed in `co(X ∩ Y)` is sent to the frame
/// simplex; the postcondition is then checked by [`check_bounded_position`].
pub fn bounded_position(x: &VoxelSet, y: &VoxelSet, eta: f64) -> Result<(AffineMap, BoundedReport)> {
    let sw = sandwich_check(x, y, eta);
    let (true, Some(p)) = (sw.holds, sw.polytope) else {
        return Err(Error::Precondition(format!(
            "inputs are not an η-sandwich: {}",
            sw.reason.unwrap_or_default()
        )));
    };
    let y_on_x = x.resample_onto(y);
    let common = x.filter_centers(|c| y_on_x.contains_point(c));
    let hull = convex_hull(&common)?;
    let w = greedy_max_simplex(hull.vertices())?;
    let frame = regular_simplex(x.dim())?;
    let map = simplex_to_frame(&w, &frame.vertices)?;
    let report = check_bounded_position(x, y, &p, &map, eta)?;
    Ok((map, report))
}
