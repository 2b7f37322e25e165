//! Exact operations on convex polygons.
//!
//! Polygons are vertex lists in counter-clockwise order. These routines give
//! grid-free values for planar convex families, where a voxel staircase would
//! put a floor of order `h` under every deficit.

use crate::geometry::linalg::{centroid, Point};
use crate::geometry::polytope::{clip_by, Halfspace};
use crate::optim::nelder_mead;

/// Shoelace area of a counter-clockwise polygon.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let m = poly.len();
    (0..m)
        .map(|i| {
            let (a, b) = (&poly[i], &poly[(i + 1) % m]);
            0.5 * (a[0] * b[1] - a[1] * b[0])
        })
        .sum()
}

pub fn polygon_perimeter(poly: &[Point]) -> f64 {
    let m = poly.len();
    (0..m).map(|i| crate::geometry::linalg::dist(&poly[i], &poly[(i + 1) % m])).sum()
}

/// Rotate so the lowest (then leftmost) vertex comes first.
fn from_bottom(poly: &[Point]) -> Vec<Point> {
    let start = (0..poly.len())
        .min_by(|&i, &j| {
            (poly[i][1], poly[i][0]).partial_cmp(&(poly[j][1], poly[j][0])).unwrap()
        })
        .unwrap();
    poly[start..].iter().chain(&poly[..start]).cloned().collect()
}

/// `sa * A + sb * B` for convex polygons by merging edge sequences.
pub fn convex_minkowski(a: &[Point], b: &[Point], sa: f64, sb: f64) -> Vec<Point> {
    let scaled = |p: &[Point], s: f64| -> Vec<Point> { p.iter().map(|v| vec![s * v[0], s * v[1]]).collect() };
    let (a, b) = (from_bottom(&scaled(a, sa)), from_bottom(&scaled(b, sb)));
    let (na, nb) = (a.len(), b.len());
    let edge = |p: &[Point], i: usize| {
        let (u, v) = (&p[i % p.len()], &p[(i + 1) % p.len()]);
        [v[0] - u[0], v[1] - u[1]]
    };
    let mut out = Vec::with_capacity(na + nb);
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        out.push(vec![a[i % na][0] + b[j % nb][0], a[i % na][1] + b[j % nb][1]]);
        let (ea, eb) = (edge(&a, i), edge(&b, j));
        let cross = ea[0] * eb[1] - ea[1] * eb[0];
        if j >= nb || (i < na && cross > 0.0) {
            i += 1;
        } else if i >= na || cross < 0.0 {
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

/// Intersection of two convex polygons.
pub fn convex_intersection(a: &[Point], b: &[Point]) -> Vec<Point> {
    let m = b.len();
    let mut poly = a.to_vec();
    for k in 0..m {
        if poly.is_empty() {
            break;
        }
        let (u, v) = (&b[k], &b[(k + 1) % m]);
        let normal = vec![v[1] - u[1], u[0] - v[0]];
        let offset = normal[0] * u[0] + normal[1] * u[1];
        poly = clip_by(&poly, &Halfspace { normal, offset });
    }
    poly
}

fn shifted(p: &[Point], x: &[f64]) -> Vec<Point> {
    p.iter().map(|v| vec![v[0] + x[0], v[1] + x[1]]).collect()
}

/// `|(A + x) △ B|` for convex polygons.
pub fn convex_sym_diff(a: &[Point], b: &[Point], x: &[f64]) -> f64 {
    let moved = shifted(a, x);
    let inter = convex_intersection(&moved, b);
    let overlap = if inter.len() >= 3 { polygon_area(&inter) } else { 0.0 };
    polygon_area(a) + polygon_area(b) - 2.0 * overlap
}

/// Continuous translation minimising `|(A + x) △ B|` for convex polygons.
///
/// The overlap `x -> |(A + x) ∩ B|` has a concave square root on its support,
/// so a local search from the centroid-aligned start finds the optimum.
pub fn convex_sym_diff_min(a: &[Point], b: &[Point]) -> (Point, f64) {
    let ca = centroid(a);
    let cb = centroid(b);
    let x0 = vec![cb[0] - ca[0], cb[1] - ca[1]];
    let scale = crate::geometry::linalg::dist(&a[0], &ca).max(1e-300);
    let area = polygon_area(a) + polygon_area(b);
    let m = nelder_mead(|x| convex_sym_diff(a, b, x), &x0, 0.05 * scale, 1e-15 * area, 2000);
    let m2 = nelder_mead(|x| convex_sym_diff(a, b, x), &m.x, 1e-3 * scale, 1e-16 * area, 2000);
    let start = convex_sym_diff(a, b, &x0);
    if start <= m2.value {
        (x0, start)
    } else {
        (m2.x, m2.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polytope::Polytope;

    fn square(lo: f64, hi: f64) -> Vec<Point> {
        vec![vec![lo, lo], vec![hi, lo], vec![hi, hi], vec![lo, hi]]
    }

    #[test]
    fn minkowski_of_squares_and_triangle() {
        let s = square(0.0, 1.0);
        let sum = convex_minkowski(&s, &s, 0.5, 0.5);
        assert!((polygon_area(&sum) - 1.0).abs() < 1e-12);
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        // square + triangle: area 1 + 0.5 + mixed term 2 = 3.5
        let st = convex_minkowski(&s, &tri, 1.0, 1.0);
        assert!((polygon_area(&st) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn minkowski_matches_hull_of_pairwise_sums() {
        let a = Polytope::regular_polygon(7, 1.0).unwrap();
        let b = Polytope::regular_polygon(5, 2.0).unwrap();
        let sum = convex_minkowski(a.vertices(), b.vertices(), 0.3, 0.7);
        let mut pts = Vec::new();
        for u in a.vertices() {
            for v in b.vertices() {
                pts.push(vec![0.3 * u[0] + 0.7 * v[0], 0.3 * u[1] + 0.7 * v[1]]);
            }
        }
        let oracle = Polytope::from_vertices(2, pts).unwrap();
        assert!((polygon_area(&sum) - oracle.volume()).abs() < 1e-12);
    }

    #[test]
    fn intersection_and_sym_diff() {
        let a = square(0.0, 2.0);
        let b = square(1.0, 3.0);
        assert!((polygon_area(&convex_intersection(&a, &b)) - 1.0).abs() < 1e-12);
        assert!((convex_sym_diff(&a, &b, &[0.0, 0.0]) - 6.0).abs() < 1e-12);
        let (x, v) = convex_sym_diff_min(&a, &b);
        assert!(v < 1e-9);
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5);
        assert!(convex_intersection(&a, &square(5.0, 6.0)).is_empty());
    }
}
