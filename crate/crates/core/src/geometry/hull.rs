//! Convex hulls of finite point sets.
//!
//! Planar hulls use Andrew's monotone chain, which is exact on lattice
//! coordinates. For `n >= 3` a quickhull runs on a slightly joggled copy of
//! the input so that every facet is a simplex; callers recover the true faces
//! by recomputing planes from the original coordinates.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::linalg::{dist, dot, normalize, orthogonal_complement, sub, Point};

/// Simplicial hull of a point set: `facets[k]` lists `n` indices into the
/// input, ordered so that the facets form a consistently oriented boundary.
#[derive(Clone, Debug)]
pub struct SimplicialHull {
    pub facets: Vec<Vec<usize>>,
    /// Outward normals of the facets, computed on the joggled copy.
    pub normals: Vec<Point>,
}

/// Affine rank of `points` with relative tolerance, plus an orthonormal basis
/// of the directions spanned (relative to `points[0]`).
pub fn affine_basis(points: &[Point], rel_tol: f64) -> Vec<Point> {
    let scale = diameter_bound(points).max(f64::MIN_POSITIVE);
    let mut basis: Vec<Point> = Vec::new();
    let dim = points[0].len();
    loop {
        if basis.len() == dim {
            return basis;
        }
        let mut best: Option<(f64, Point)> = None;
        for p in points {
            let mut r = sub(p, &points[0]);
            for b in &basis {
                let c = dot(&r, b);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= c * bi;
                }
            }
            let len = dot(&r, &r).sqrt();
            if best.as_ref().is_none_or(|(l, _)| len > *l) {
                best = Some((len, r));
            }
        }
        match best {
            Some((len, r)) if len > rel_tol * scale => basis.push(normalize(&r).expect("nonzero")),
            _ => return basis,
        }
    }
}

/// Cheap upper bound on the diameter: the bounding-box diagonal.
pub fn diameter_bound(points: &[Point]) -> f64 {
    let dim = points[0].len();
    let mut sq = 0.0;
    for k in 0..dim {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[k]), h.max(p[k])));
        sq += (hi - lo) * (hi - lo);
    }
    sq.sqrt()
}

/// Indices of the hull vertices of a planar point set in counter-clockwise
/// order. Collinear boundary points are dropped.
pub fn monotone_chain(points: &[Point]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .partial_cmp(&points[b][0])
            .unwrap()
            .then(points[a][1].partial_cmp(&points[b][1]).unwrap())
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| {
        let (o, a, b) = (&points[o], &points[a], &points[b]);
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for &i in &idx {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower = hull.len() + 1;
    for &i in idx.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

struct Facet {
    verts: Vec<usize>,
    normal: Point,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn facet_plane(verts: &[usize], pts: &[Point], interior: &[f64]) -> Option<(Point, f64)> {
    let edges: Vec<Point> = verts[1..].iter().map(|&v| sub(&pts[v], &pts[verts[0]])).collect();
    let n = normalize(&orthogonal_complement(&edges))?;
    let b = dot(&n, &pts[verts[0]]);
    if dot(&n, interior) > b {
        Some((n.iter().map(|x| -x).collect(), -b))
    } else {
        Some((n, b))
    }
}

/// Quickhull for full-dimensional point sets in `R^n`, `n >= 2`.
///
/// The input is joggled by about `1e-9` of its diameter with a fixed seed, so
/// results are deterministic. Fails with [`Error::Degenerate`] when the points
/// do not span `R^n`.
pub fn quickhull(points: &[Point]) -> Result<SimplicialHull> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = points[0].len();
    let diam = diameter_bound(points);
    if affine_basis(points, 1e-10).len() < dim {
        return Err(Error::Degenerate("points do not span the ambient space".into()));
    }
    // Points much closer than the joggle produce slivers whose normals are
    // too noisy for consistent visibility tests; hull one representative.
    let reps = representatives(points, 1e-8 * diam);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a09_e667);
    let jog = 1e-9 * diam;
    let pts: Vec<Point> = reps
        .iter()
        .map(|&i| points[i].iter().map(|x| x + jog * rng.random_range(-1.0..1.0)).collect())
        .collect();
    let eps = 1e-13 * (diam + pts.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())));

    // initial simplex: greedy farthest points from the current affine span
    let mut simplex = vec![0usize];
    let far = (0..pts.len())
        .max_by(|&a, &b| dist(&pts[a], &pts[0]).partial_cmp(&dist(&pts[b], &pts[0])).unwrap())
        .unwrap();
    simplex[0] = far;
    let mut basis: Vec<Point> = Vec::new();
    while simplex.len() < dim + 1 {
        let mut best = (0.0, 0usize);
        for (i, p) in pts.iter().enumerate() {
            let mut r = sub(p, &pts[simplex[0]]);
            for b in &basis {
                let c = dot(&r, b);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= c * bi;
                }
            }
            let len = dot(&r, &r).sqrt();
            if len > best.0 {
                best = (len, i);
            }
        }
        let mut r = sub(&pts[best.1], &pts[simplex[0]]);
        for b in &basis {
            let c = dot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
        basis.push(normalize(&r).ok_or_else(|| Error::Degenerate("flat point set".into()))?);
        simplex.push(best.1);
    }
    let interior: Point = {
        let mut c = vec![0.0; dim];
        for &i in &simplex {
            for k in 0..dim {
                c[k] += pts[i][k] / (dim + 1) as f64;
            }
        }
        c
    };

    let mut facets: Vec<Facet> = Vec::new();
    for skip in 0..=dim {
        let verts: Vec<usize> = simplex.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
        let (normal, offset) = facet_plane(&verts, &pts, &interior)
            .ok_or_else(|| Error::Degenerate("flat initial simplex".into()))?;
        facets.push(Facet { verts, normal, offset, outside: Vec::new(), alive: true });
    }
    for i in 0..pts.len() {
        if simplex.contains(&i) {
            continue;
        }
        if let Some(f) = facets.iter_mut().find(|f| dot(&f.normal, &pts[i]) - f.offset > eps) {
            f.outside.push(i);
        }
    }

    let mut cursor = 0;
    loop {
        // next live facet with a nonempty outside set
        let mut found = None;
        for step in 0..facets.len() {
            let k = (cursor + step) % facets.len();
            if facets[k].alive && !facets[k].outside.is_empty() {
                found = Some(k);
                break;
            }
        }
        let Some(fk) = found else { break };
        cursor = fk;
        let apex = {
            let f = &facets[fk];
            *f.outside
                .iter()
                .max_by(|&&a, &&b| {
                    let da = dot(&f.normal, &pts[a]);
                    let db = dot(&f.normal, &pts[b]);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap()
        };
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&k| facets[k].alive && dot(&facets[k].normal, &pts[apex]) - facets[k].offset > eps)
            .collect();
        let mut ridges: HashMap<Vec<usize>, (usize, Vec<usize>)> = HashMap::new();
        for &k in &visible {
            let verts = &facets[k].verts;
            for skip in 0..verts.len() {
                let ridge: Vec<usize> = verts.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &v)| v).collect();
                let mut key = ridge.clone();
                key.sort_unstable();
                ridges.entry(key).or_insert((0, ridge)).0 += 1;
            }
        }
        let mut orphans: Vec<usize> = Vec::new();
        for &k in &visible {
            facets[k].alive = false;
            orphans.append(&mut facets[k].outside);
        }
        let first_new = facets.len();
        let mut horizon: Vec<Vec<usize>> = ridges.into_values().filter(|(c, _)| *c == 1).map(|(_, r)| r).collect();
        horizon.sort();
        for mut verts in horizon {
            verts.push(apex);
            if let Some((normal, offset)) = facet_plane(&verts, &pts, &interior) {
                facets.push(Facet { verts, normal, offset, outside: Vec::new(), alive: true });
            }
        }
        for p in orphans {
            if p == apex {
                continue;
            }
            if let Some(f) = facets[first_new..]
                .iter_mut()
                .find(|f| dot(&f.normal, &pts[p]) - f.offset > eps)
            {
                f.outside.push(p);
            }
        }
    }

    let mut out = SimplicialHull { facets: Vec::new(), normals: Vec::new() };
    for f in facets.into_iter().filter(|f| f.alive) {
        // orient vertex order so the simplex (interior, verts...) is positive
        let mut verts = f.verts;
        let mut rows: Vec<Point> = verts.iter().map(|&v| sub(&pts[v], &interior)).collect();
        if crate::geometry::linalg::det(&rows) < 0.0 {
            verts.swap(0, 1);
            rows.swap(0, 1);
        }
        out.facets.push(verts.iter().map(|&v| reps[v]).collect());
        out.normals.push(f.normal);
    }
    Ok(out)
}

/// Indices of points kept after dropping those within `tol` (max-norm) of an
/// earlier kept point, in increasing order.
fn representatives(points: &[Point], tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::with_capacity(points.len());
    for &i in &order {
        let p = &points[i];
        let dup = kept
            .iter()
            .rev()
            .take_while(|&&k| p[0] - points[k][0] <= tol)
            .any(|&k| p.iter().zip(&points[k]).all(|(a, b)| (a - b).abs() <= tol));
        if !dup {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}
