//! Convex polytopes with vertex and halfspace representations.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::hull::{affine_basis, diameter_bound, monotone_chain, quickhull};
use crate::geometry::linalg::{
    self, add, centroid, dist, dot, normalize, orthogonal_complement, scale, simplex_signed_volume,
    sub, Point,
};

/// The halfspace `{x : <normal, x> <= offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

impl Halfspace {
    /// Signed distance of `p` beyond the boundary (positive outside).
    pub fn excess(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

/// A boundary simplex: `dim` indices into [`Polytope::boundary_points`] and
/// the outward unit normal of the supporting hyperplane it lies in.
#[derive(Clone, Debug)]
pub struct BoundarySimplex {
    pub verts: Vec<usize>,
    pub normal: Point,
}

/// A compact convex polytope.
///
/// Full-dimensional polytopes carry both representations and a boundary
/// triangulation. Lower-dimensional ones (a segment in the plane, a single
/// point) keep only their extreme points and have volume zero.
#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Point>,
    halfspaces: Vec<Halfspace>,
    boundary_points: Vec<Point>,
    boundary: Vec<BoundarySimplex>,
    volume: f64,
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    dim: usize,
    vertices: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    halfspaces: Option<Vec<Halfspace>>,
}

impl Polytope {
    /// Convex hull of a finite point set.
    pub fn from_vertices(dim: usize, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        let basis = affine_basis(&points, 1e-10);
        if basis.len() < dim {
            return Ok(Self::flat(dim, &points, &basis));
        }
        match dim {
            1 => Ok(Self::interval(&points)),
            2 => Ok(Self::polygon(&points)),
            _ => Self::simplicial(dim, &points),
        }
    }

    fn empty_shell(dim: usize, vertices: Vec<Point>) -> Self {
        Self { dim, vertices, halfspaces: Vec::new(), boundary_points: Vec::new(), boundary: Vec::new(), volume: 0.0 }
    }

    fn flat(dim: usize, points: &[Point], basis: &[Point]) -> Self {
        let o = &points[0];
        if basis.is_empty() {
            return Self::empty_shell(dim, vec![o.clone()]);
        }
        let k = basis.len();
        let local: Vec<Point> = points.iter().map(|p| basis.iter().map(|b| dot(&sub(p, o), b)).collect()).collect();
        let inner = Self::from_vertices(k, local).expect("full-dimensional in its span");
        let vertices = inner
            .vertices
            .iter()
            .map(|c| {
                let mut p = o.clone();
                for (ci, b) in c.iter().zip(basis) {
                    p = linalg::axpy(&p, *ci, b);
                }
                p
            })
            .collect();
        Self::empty_shell(dim, vertices)
    }

    fn interval(points: &[Point]) -> Self {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        Self {
            dim: 1,
            vertices: vec![vec![lo], vec![hi]],
            halfspaces: vec![
                Halfspace { normal: vec![-1.0], offset: -lo },
                Halfspace { normal: vec![1.0], offset: hi },
            ],
            boundary_points: vec![vec![lo], vec![hi]],
            boundary: vec![
                BoundarySimplex { verts: vec![0], normal: vec![-1.0] },
                BoundarySimplex { verts: vec![1], normal: vec![1.0] },
            ],
            volume: hi - lo,
        }
    }

    fn polygon(points: &[Point]) -> Self {
        let order = monotone_chain(points);
        let vertices: Vec<Point> = order.iter().map(|&i| points[i].clone()).collect();
        let m = vertices.len();
        let mut halfspaces = Vec::with_capacity(m);
        let mut boundary = Vec::with_capacity(m);
        let mut area = 0.0;
        for i in 0..m {
            let (a, b) = (&vertices[i], &vertices[(i + 1) % m]);
            area += 0.5 * (a[0] * b[1] - a[1] * b[0]);
            let normal = normalize(&[b[1] - a[1], a[0] - b[0]]).expect("distinct hull vertices");
            halfspaces.push(Halfspace { offset: dot(&normal, a), normal: normal.clone() });
            boundary.push(BoundarySimplex { verts: vec![i, (i + 1) % m], normal });
        }
        Self { dim: 2, boundary_points: vertices.clone(), vertices, halfspaces, boundary, volume: area }
    }

    fn simplicial(dim: usize, points: &[Point]) -> Result<Self> {
        let diam = diameter_bound(points);
        let hull = quickhull(points)?;
        let scale_len = diam.max(f64::MIN_POSITIVE);
        let tol = 1e-9 * scale_len;

        // reindex the points that appear on the boundary
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut bpts: Vec<Point> = Vec::new();
        let facets: Vec<Vec<usize>> = hull
            .facets
            .iter()
            .map(|f| {
                f.iter()
                    .map(|&v| {
                        *index.entry(v).or_insert_with(|| {
                            bpts.push(points[v].clone());
                            bpts.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        let interior = centroid(&bpts);

        let mut volume = 0.0;
        for f in &facets {
            let mut s = Vec::with_capacity(dim + 1);
            s.push(interior.clone());
            s.extend(f.iter().map(|&v| bpts[v].clone()));
            volume += simplex_signed_volume(&s);
        }

        let min_measure = 1e-10 * scale_len.powi(dim as i32 - 1);
        let mut planes: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut halfspaces: Vec<Halfspace> = Vec::new();
        let mut boundary = Vec::new();
        for f in &facets {
            let edges: Vec<Point> = f[1..].iter().map(|&v| sub(&bpts[v], &bpts[f[0]])).collect();
            let raw = orthogonal_complement(&edges);
            if linalg::norm(&raw) < min_measure {
                continue;
            }
            let mut n = normalize(&raw).expect("nonzero");
            if dot(&n, &sub(&bpts[f[0]], &interior)) < 0.0 {
                n = scale(&n, -1.0);
            }
            let offset = bpts.iter().map(|p| dot(&n, p)).fold(f64::NEG_INFINITY, f64::max);
            if f.iter().any(|&v| offset - dot(&n, &bpts[v]) > 1e-7 * scale_len) {
                // a sliver whose original plane is not supporting
                continue;
            }
            let mut key: Vec<i64> = n.iter().map(|x| (x * 1e7).round() as i64).collect();
            key.push((offset / scale_len * 1e7).round() as i64);
            planes.entry(key).or_insert_with(|| {
                halfspaces.push(Halfspace { normal: n.clone(), offset });
                halfspaces.len() - 1
            });
            boundary.push(BoundarySimplex { verts: f.clone(), normal: n });
        }

        let mut vertices: Vec<Point> = bpts
            .iter()
            .filter(|p| {
                let active: Vec<&Point> =
                    halfspaces.iter().filter(|h| h.excess(p).abs() <= tol).map(|h| &h.normal).collect();
                active.len() >= dim && rank(&active) == dim
            })
            .cloned()
            .collect();
        vertices.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { dim, vertices, halfspaces, boundary_points: bpts, boundary, volume })
    }

    /// The bounded intersection of halfspaces. Normals need not be unit.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        let mut hs = Vec::with_capacity(halfspaces.len());
        for h in halfspaces {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: h.normal.len() });
            }
            let len = linalg::norm(&h.normal);
            if !(len > 0.0) {
                return Err(Error::InvalidParameter("zero halfspace normal".into()));
            }
            hs.push(Halfspace { normal: scale(&h.normal, 1.0 / len), offset: h.offset / len });
        }
        // bounded iff the normals positively span R^n
        if hs.len() <= dim {
            return Err(Error::Unbounded);
        }
        let normal_hull = Self::from_vertices(dim, hs.iter().map(|h| h.normal.clone()).collect())?;
        if !normal_hull.is_full_dimensional() || normal_hull.halfspaces.iter().any(|h| h.offset <= 1e-12) {
            return Err(Error::Unbounded);
        }
        let vertices = if dim == 2 { clip_polygon_vertices(&hs) } else { enumerate_vertices(dim, &hs) };
        if vertices.is_empty() {
            return Err(Error::EmptySet);
        }
        Self::from_vertices(dim, vertices)
    }

    /// `self ∩ other`.
    ///
    /// When a common interior point is at hand the intersection is computed
    /// by polarity: the polar of an intersection is the hull of the polar
    /// points `n / (c - <n, center>)` of all facet inequalities.
    pub fn intersection(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if !self.is_full_dimensional() || !other.is_full_dimensional() {
            return Err(Error::Degenerate("intersection needs full-dimensional operands".into()));
        }
        let mut hs = self.halfspaces.clone();
        hs.extend(other.halfspaces.iter().cloned());
        if self.dim <= 2 {
            return Self::from_halfspaces(self.dim, hs);
        }
        let mut shared: Vec<Point> = self.vertices.iter().filter(|v| other.contains(v, 1e-12)).cloned().collect();
        shared.extend(other.vertices.iter().filter(|v| self.contains(v, 1e-12)).cloned());
        let candidates = [
            (!shared.is_empty()).then(|| centroid(&shared)),
            Some(centroid(&self.vertices)),
            Some(centroid(&other.vertices)),
        ];
        let scale_len = self.diameter().max(other.diameter());
        for center in candidates.into_iter().flatten() {
            let margin = hs.iter().map(|h| -h.excess(&center)).fold(f64::INFINITY, f64::min);
            if margin <= 1e-9 * scale_len {
                continue;
            }
            let dual: Vec<Point> =
                hs.iter().map(|h| scale(&h.normal, 1.0 / (h.offset - dot(&h.normal, &center)))).collect();
            let polar = Self::from_vertices(self.dim, dual)?;
            let verts: Vec<Point> = polar
                .halfspaces
                .iter()
                .filter(|f| f.offset > 0.0)
                .map(|f| add(&center, &scale(&f.normal, 1.0 / f.offset)))
                .collect();
            return Self::from_vertices(self.dim, verts);
        }
        Self::from_halfspaces(self.dim, hs)
    }

    /// `count` independent uniform points, by rejection from the bounding box.
    pub fn sample_uniform<R: rand::Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Point> {
        let (lo, hi) = self.bounding_box();
        let mut out = Vec::with_capacity(count);
        if !self.is_full_dimensional() {
            return out;
        }
        while out.len() < count {
            let p: Point = lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
            if self.contains(&p, 0.0) {
                out.push(p);
            }
        }
        out
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = lo.len();
        let mut pts = Vec::with_capacity(1 << dim);
        for mask in 0..(1usize << dim) {
            pts.push((0..dim).map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] }).collect());
        }
        Self::from_vertices(dim, pts)
    }

    /// Regular `m`-gon inscribed in the circle of the given radius about the origin.
    pub fn regular_polygon(m: usize, radius: f64) -> Result<Self> {
        let pts = (0..m)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                vec![radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Self::from_vertices(2, pts)
    }

    /// Polytope inscribed in the ball `B(0, radius)`: a regular polygon in the
    /// plane, a Fibonacci point set on the sphere in `R^3`, and deterministic
    /// pseudo-random sphere points beyond.
    pub fn ball(dim: usize, radius: f64, resolution: usize) -> Result<Self> {
        match dim {
            1 => Self::from_vertices(1, vec![vec![-radius], vec![radius]]),
            2 => Self::regular_polygon(resolution.max(3), radius),
            3 => {
                let m = resolution.max(4);
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                let pts = (0..m)
                    .map(|k| {
                        let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                        let r = (1.0 - z * z).sqrt();
                        let a = golden * k as f64;
                        vec![radius * r * a.cos(), radius * r * a.sin(), radius * z]
                    })
                    .collect();
                Self::from_vertices(3, pts)
            }
            _ => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(dim as u64);
                let pts = (0..resolution.max(dim + 1))
                    .map(|_| scale(&linalg::random_unit(dim, &mut rng), radius))
                    .collect();
                Self::from_vertices(dim, pts)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Extreme points, canonically ordered (counter-clockwise in the plane).
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Points referenced by [`Polytope::boundary`].
    pub fn boundary_points(&self) -> &[Point] {
        &self.boundary_points
    }

    /// Simplicial decomposition of the boundary.
    pub fn boundary(&self) -> &[BoundarySimplex] {
        &self.boundary
    }

    pub fn is_full_dimensional(&self) -> bool {
        !self.halfspaces.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Surface measure of the boundary.
    pub fn surface_area(&self) -> f64 {
        self.boundary
            .iter()
            .map(|b| {
                let pts: Vec<Point> = b.verts.iter().map(|&v| self.boundary_points[v].clone()).collect();
                linalg::simplex_measure(&pts)
            })
            .sum()
    }

    /// Volume centroid (vertex centroid for lower-dimensional polytopes).
    pub fn centroid(&self) -> Point {
        if !self.is_full_dimensional() {
            return centroid(&self.vertices);
        }
        let o = centroid(&self.boundary_points);
        let mut acc = vec![0.0; self.dim];
        let mut total = 0.0;
        for b in &self.boundary {
            let mut s = vec![o.clone()];
            s.extend(b.verts.iter().map(|&v| self.boundary_points[v].clone()));
            let v = simplex_signed_volume(&s);
            let c = centroid(&s);
            for (a, ci) in acc.iter_mut().zip(&c) {
                *a += v * ci;
            }
            total += v;
        }
        if total.abs() < f64::MIN_POSITIVE {
            return o;
        }
        scale(&acc, 1.0 / total)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(dist(a, b));
            }
        }
        d
    }

    /// Axis-aligned bounding box of the vertices.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in &self.vertices {
            for k in 0..self.dim {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// `max_{v in P} <v, u>`.
    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices.iter().map(|v| dot(v, u)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership with absolute tolerance `tol`.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        if self.is_full_dimensional() {
            self.halfspaces.iter().all(|h| h.excess(p) <= tol)
        } else {
            let shifted: Vec<Point> = self.vertices.iter().map(|v| sub(v, p)).collect();
            linalg::norm(&min_norm_point(&shifted)) <= tol
        }
    }

    /// Minkowski gauge `inf{s > 0 : x in s P}`; requires the origin in the interior.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        if !self.is_full_dimensional() || self.halfspaces.iter().any(|h| h.offset <= 0.0) {
            return Err(Error::Precondition("origin must be interior for the gauge".into()));
        }
        Ok(self.halfspaces.iter().map(|h| dot(&h.normal, x) / h.offset).fold(0.0, f64::max))
    }

    /// Largest `r` with `B(center, r)` inside the polytope (negative if `center` is outside).
    pub fn inradius_about(&self, center: &[f64]) -> f64 {
        self.halfspaces.iter().map(|h| -h.excess(center)).fold(f64::INFINITY, f64::min)
    }

    /// Smallest `R` with the polytope inside `B(center, R)`.
    pub fn circumradius_about(&self, center: &[f64]) -> f64 {
        self.vertices.iter().map(|v| dist(v, center)).fold(0.0, f64::max)
    }

    /// Image under `x -> M x + b`, `M` given as rows.
    pub fn map_affine(&self, m: &[Point], b: &[f64]) -> Result<Self> {
        let pts = self
            .vertices
            .iter()
            .map(|v| add(&m.iter().map(|row| dot(row, v)).collect::<Point>(), b))
            .collect();
        Self::from_vertices(m.len(), pts)
    }

    pub fn translate(&self, v: &[f64]) -> Self {
        let mut out = self.clone();
        for p in out.vertices.iter_mut().chain(out.boundary_points.iter_mut()) {
            *p = add(p, v);
        }
        for h in &mut out.halfspaces {
            h.offset += dot(&h.normal, v);
        }
        out
    }

    /// Homothety `x -> center + s (x - center)`, `s > 0`.
    pub fn scale_about(&self, center: &[f64], s: f64) -> Self {
        assert!(s > 0.0, "homothety factor must be positive");
        let map = |p: &Point| add(center, &scale(&sub(p, center), s));
        let mut out = self.clone();
        out.vertices = self.vertices.iter().map(map).collect();
        out.boundary_points = self.boundary_points.iter().map(map).collect();
        for h in &mut out.halfspaces {
            h.offset = dot(&h.normal, center) + s * (h.offset - dot(&h.normal, center));
        }
        out.volume = self.volume * s.powi(self.dim as i32);
        out
    }

    pub fn to_json(&self) -> String {
        let j = PolytopeJson {
            dim: self.dim,
            vertices: self.vertices.clone(),
            halfspaces: self.is_full_dimensional().then(|| self.halfspaces.clone()),
        };
        serde_json::to_string_pretty(&j).expect("plain data serializes")
    }

    /// Parse the JSON form. Vertices take precedence; when the vertex list is
    /// empty the halfspaces are used instead.
    pub fn from_json(text: &str) -> Result<Self> {
        let j: PolytopeJson = serde_json::from_str(text)?;
        if j.vertices.is_empty() {
            let hs = j.halfspaces.ok_or(Error::EmptySet)?;
            return Self::from_halfspaces(j.dim, hs);
        }
        Self::from_vertices(j.dim, j.vertices)
    }
}

fn rank(rows: &[&Point]) -> usize {
    let n = rows[0].len();
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    m.svd(false, false).singular_values.iter().filter(|s| **s > 1e-7).count()
}

pub(crate) fn enumerate_vertices(dim: usize, hs: &[Halfspace]) -> Vec<Point> {
    let m = hs.len();
    let scale_b = hs.iter().map(|h| h.offset.abs()).fold(1.0, f64::max);
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..dim).collect();
    loop {
        let rows: Vec<Point> = pick.iter().map(|&i| hs[i].normal.clone()).collect();
        if linalg::det(&rows).abs() > 1e-12 {
            let b: Vec<f64> = pick.iter().map(|&i| hs[i].offset).collect();
            if let Some(x) = linalg::solve(&rows, &b) {
                if hs.iter().all(|h| h.excess(&x) <= 1e-9 * scale_b) {
                    out.push(x);
                }
            }
        }
        // next combination
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if pick[k] < m - dim + k {
                pick[k] += 1;
                for j in k + 1..dim {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Sutherland-Hodgman clip of a convex polygon by one halfspace.
pub(crate) fn clip_by(poly: &[Point], h: &Halfspace) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (a, b) = (&poly[i], &poly[(i + 1) % poly.len()]);
        let (ea, eb) = (h.excess(a), h.excess(b));
        if ea <= 0.0 {
            out.push(a.clone());
        }
        if (ea < 0.0 && eb > 0.0) || (ea > 0.0 && eb < 0.0) {
            let s = ea / (ea - eb);
            out.push(linalg::axpy(a, s, &sub(b, a)));
        }
    }
    out
}

fn clip_polygon_vertices(hs: &[Halfspace]) -> Vec<Point> {
    let big = 1e6 * hs.iter().map(|h| h.offset.abs()).fold(1.0, f64::max);
    let square = |l: f64, c: &[f64]| {
        vec![vec![c[0] - l, c[1] - l], vec![c[0] + l, c[1] - l], vec![c[0] + l, c[1] + l], vec![c[0] - l, c[1] + l]]
    };
    let mut poly = square(big, &[0.0, 0.0]);
    for h in hs {
        poly = clip_by(&poly, h);
    }
    if poly.is_empty() {
        return poly;
    }
    // second pass from a tight box for accuracy
    let c = centroid(&poly);
    let l = 2.0 * poly.iter().map(|p| dist(p, &c)).fold(0.0, f64::max) + 1e-9;
    let mut poly = square(l, &c);
    for h in hs {
        poly = clip_by(&poly, h);
    }
    poly
}

/// Minimum-norm point of `co(points)` by Wolfe's algorithm.
pub fn min_norm_point(points: &[Point]) -> Point {
    let dim = points[0].len();
    let scale_sq = points.iter().map(|p| dot(p, p)).fold(f64::MIN_POSITIVE, f64::max);
    let tol = 1e-14 * scale_sq;
    let first = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).partial_cmp(&dot(&points[b], &points[b])).unwrap())
        .unwrap();
    let mut set: Vec<usize> = vec![first];
    let mut w: Vec<f64> = vec![1.0];
    let mut x = points[first].clone();
    let combine = |set: &[usize], w: &[f64]| {
        let mut y = vec![0.0; dim];
        for (&i, &wi) in set.iter().zip(w) {
            for (yk, pk) in y.iter_mut().zip(&points[i]) {
                *yk += wi * pk;
            }
        }
        y
    };
    for _ in 0..1000 {
        let xx = dot(&x, &x);
        let j = (0..points.len())
            .min_by(|&a, &b| dot(&x, &points[a]).partial_cmp(&dot(&x, &points[b])).unwrap())
            .unwrap();
        if xx - dot(&x, &points[j]) <= tol || set.contains(&j) || xx <= tol * 1e-4 {
            return x;
        }
        set.push(j);
        w.push(0.0);
        loop {
            let alpha = affine_min_norm(points, &set);
            if alpha.iter().all(|a| *a > 1e-12) {
                w = alpha;
                break;
            }
            let mut theta: f64 = 1.0;
            for (wi, ai) in w.iter().zip(&alpha) {
                if *ai <= 1e-12 && wi - ai > 0.0 {
                    theta = theta.min(wi / (wi - ai));
                }
            }
            for (wi, ai) in w.iter_mut().zip(&alpha) {
                *wi = (1.0 - theta) * *wi + theta * ai;
            }
            let keep: Vec<bool> = w.iter().map(|wi| *wi > 1e-12).collect();
            let mut k = 0;
            set.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            w.retain(|wi| *wi > 1e-12);
            let s: f64 = w.iter().sum();
            for wi in &mut w {
                *wi /= s;
            }
            if set.len() == 1 {
                w = vec![1.0];
                break;
            }
        }
        x = combine(&set, &w);
    }
    x
}

/// Barycentric weights of the min-norm point of the affine hull of `set`.
fn affine_min_norm(points: &[Point], set: &[usize]) -> Vec<f64> {
    let k = set.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = dot(&points[set[a]], &points[set[b]]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m.clone().lu().solve(&rhs).unwrap_or_else(|| {
        m.pseudo_inverse(1e-14).expect("pseudo-inverse exists") * &rhs
    });
    (0..k).map(|i| sol[i]).collect()
}

/// Euclidean distance from `x` to `p`; zero when the containment test passes.
pub fn dist_to_convex(x: &[f64], p: &Polytope) -> f64 {
    if p.contains(x, 1e-9) {
        return 0.0;
    }
    if p.dim == 2 && p.is_full_dimensional() {
        let m = p.vertices.len();
        return (0..m)
            .map(|i| point_segment_distance(x, &p.vertices[i], &p.vertices[(i + 1) % m]))
            .fold(f64::INFINITY, f64::min);
    }
    let shifted: Vec<Point> = p.vertices.iter().map(|v| sub(v, x)).collect();
    linalg::norm(&min_norm_point(&shifted))
}

pub(crate) fn point_segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    let s = if len2 > 0.0 { (dot(&sub(x, a), &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    dist(x, &linalg::axpy(a, s, &ab))
}

/// `B(o, 1/l) ⊂ P ⊂ B(o, l)` with `o` the origin.
pub fn ball_sandwich_check(p: &Polytope, ell: f64) -> bool {
    if !p.is_full_dimensional() || !(ell > 0.0) {
        return false;
    }
    let origin = vec![0.0; p.dim];
    p.inradius_about(&origin) >= 1.0 / ell - 1e-9 && p.circumradius_about(&origin) <= ell + 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_cube_volume_and_faces() {
        let c = Polytope::cuboid(&[0.0; 3], &[1.0; 3]).unwrap();
        assert!((c.volume() - 1.0).abs() < 1e-12);
        assert_eq!(c.vertices().len(), 8);
        assert_eq!(c.halfspaces().len(), 6);
        assert!((c.surface_area() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn cube_lattice_drops_non_extreme_points() {
        let mut pts = Vec::new();
        for i in 0..=2 {
            for j in 0..=2 {
                for k in 0..=2 {
                    pts.push(vec![i as f64, j as f64, k as f64]);
                }
            }
        }
        let c = Polytope::from_vertices(3, pts).unwrap();
        assert_eq!(c.vertices().len(), 8);
        assert_eq!(c.halfspaces().len(), 6);
        assert!((c.volume() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn halfspace_round_trip() {
        let c = Polytope::cuboid(&[-1.0, -2.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        let back = Polytope::from_halfspaces(3, c.halfspaces().to_vec()).unwrap();
        assert!((back.volume() - 24.0).abs() < 1e-9);
        assert_eq!(back.vertices().len(), 8);
        let tri = Polytope::from_halfspaces(
            2,
            vec![
                Halfspace { normal: vec![-1.0, 0.0], offset: 0.0 },
                Halfspace { normal: vec![0.0, -1.0], offset: 0.0 },
                Halfspace { normal: vec![1.0, 1.0], offset: 1.0 },
            ],
        )
        .unwrap();
        assert!((tri.volume() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_empty_systems() {
        let open = vec![
            Halfspace { normal: vec![1.0, 0.0], offset: 1.0 },
            Halfspace { normal: vec![0.0, 1.0], offset: 1.0 },
            Halfspace { normal: vec![1.0, 1.0], offset: 1.0 },
        ];
        assert!(matches!(Polytope::from_halfspaces(2, open), Err(Error::Unbounded)));
        let empty = vec![
            Halfspace { normal: vec![1.0], offset: -1.0 },
            Halfspace { normal: vec![-1.0], offset: -1.0 },
        ];
        assert!(matches!(Polytope::from_halfspaces(1, empty), Err(Error::EmptySet)));
    }

    #[test]
    fn representations_agree_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 2..=4 {
            let pts: Vec<Point> = (0..30).map(|_| linalg::random_in_ball(&vec![0.0; dim], 1.0, &mut rng)).collect();
            let p = Polytope::from_vertices(dim, pts).unwrap();
            for _ in 0..300 {
                let x: Point = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let by_h = p.contains(&x, 0.0);
                let shifted: Vec<Point> = p.vertices().iter().map(|v| sub(v, &x)).collect();
                let d = linalg::norm(&min_norm_point(&shifted));
                if by_h {
                    assert!(d < 1e-7, "dim {dim}: inside by H-rep but V-rep distance {d}");
                } else {
                    assert!(d > 0.0 || p.halfspaces().iter().map(|h| h.excess(&x)).fold(0.0, f64::max) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn distance_examples() {
        let disc = Polytope::ball(2, 1.0, 512).unwrap();
        assert!((dist_to_convex(&[2.0, 0.0], &disc) - 1.0).abs() < 1e-4);
        assert_eq!(dist_to_convex(&[0.1, 0.2], &disc), 0.0);
        let point = Polytope::from_vertices(2, vec![vec![0.0, 0.0]]).unwrap();
        assert!((dist_to_convex(&[3.0, 4.0], &point) - 5.0).abs() < 1e-12);
        let ball3 = Polytope::ball(3, 1.0, 400).unwrap();
        let d = dist_to_convex(&[0.0, 0.0, 3.0], &ball3);
        assert!((d - 2.0).abs() < 2e-2);
    }

    #[test]
    fn sandwich_examples() {
        // inscribed 64-gon: inradius cos(pi/64) < 1/1.0001
        let disc = Polytope::ball(2, 1.0, 64).unwrap();
        assert!(ball_sandwich_check(&disc, 2.0));
        assert!(!ball_sandwich_check(&disc, 1.0001));
        let seg = Polytope::from_vertices(2, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(!ball_sandwich_check(&seg, 10.0));
        assert_eq!(seg.volume(), 0.0);
        assert_eq!(seg.vertices().len(), 2);
    }

    #[test]
    fn json_round_trip() {
        let p = Polytope::regular_polygon(7, 1.5).unwrap();
        let q = Polytope::from_json(&p.to_json()).unwrap();
        assert!((p.volume() - q.volume()).abs() < 1e-12);
        let only_h = r#"{"dim": 1, "vertices": [], "halfspaces": [{"normal": [1.0], "offset": 2.0}, {"normal": [-2.0], "offset": 2.0}]}"#;
        assert!((Polytope::from_json(only_h).unwrap().volume() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gauge_and_homothety() {
        let sq = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert!((sq.gauge(&[0.5, 2.0]).unwrap() - 2.0).abs() < 1e-12);
        let big = sq.scale_about(&[0.0, 0.0], 3.0);
        assert!((big.volume() - 36.0).abs() < 1e-12);
        assert!(big.contains(&[2.9, -2.9], 0.0));
        let moved = sq.translate(&[5.0, 0.0]);
        assert!(moved.contains(&[5.9, 0.0], 0.0) && !moved.contains(&[0.0, 0.0], 0.0));
        assert!((sq.centroid()[0]).abs() < 1e-12);
    }

    #[test]
    fn intersection_by_polarity_matches_brute_force() {
        let a = Polytope::cuboid(&[0.0; 3], &[2.0; 3]).unwrap();
        let b = Polytope::cuboid(&[1.0, 0.5, -1.0], &[3.0, 1.5, 1.5]).unwrap();
        let i = a.intersection(&b).unwrap();
        assert!((i.volume() - 1.5).abs() < 1e-12);
        let ball = Polytope::ball(3, 1.0, 40).unwrap();
        let moved = ball.translate(&[0.5, 0.0, 0.0]);
        let fast = ball.intersection(&moved).unwrap();
        let mut hs = ball.halfspaces().to_vec();
        hs.extend(moved.halfspaces().iter().cloned());
        let slow = Polytope::from_halfspaces(3, hs).unwrap();
        assert!((fast.volume() - slow.volume()).abs() < 1e-9, "{} {}", fast.volume(), slow.volume());
    }

    #[test]
    fn uniform_samples_stay_inside() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let tri = Polytope::from_vertices(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let pts = tri.sample_uniform(4000, &mut rng);
        assert!(pts.iter().all(|p| tri.contains(p, 0.0)));
        let mean_x = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        assert!((mean_x - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn near_duplicate_points_keep_volume() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for trial in 0..20 {
            let base: Vec<Point> = (0..60).map(|_| linalg::random_unit(3, &mut rng)).collect();
            let clean = Polytope::from_vertices(3, base.clone()).unwrap();
            let mut noisy = base.clone();
            for p in &base {
                for _ in 0..3 {
                    let eps = [1e-15, 1e-11, 1e-10, 1e-7, 1e-6][rng.random_range(0..5)];
                    noisy.push(p.iter().map(|x| x + eps * rng.random_range(-1.0..1.0)).collect());
                }
            }
            let dirty = Polytope::from_vertices(3, noisy).unwrap();
            assert!((clean.volume() - dirty.volume()).abs() < 1e-5, "trial {trial}: {} vs {}", clean.volume(), dirty.volume());
        }
    }
}
