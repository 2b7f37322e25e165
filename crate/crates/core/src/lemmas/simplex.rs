//! Facet normals of a sandwiched simplex, the conelike ball built from them,
//! and the point where a median ray meets a facet.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{
    axpy, centroid, dist, dot, norm, normalize, orthogonal_complement, random_in_ball, random_unit, scale, solve, sub,
    Point,
};
use crate::geometry::polytope::Polytope;

/// Number of trial directions in the σ search.
pub const SIGMA_DIRECTIONS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexNormals {
    /// Inward unit normals, `normals[i]` belonging to the facet opposite vertex `i`.
    pub normals: Vec<Point>,
    /// `min_{|v|=1} max_{1≤i≤n} |⟨f_i, v⟩|` from the direction search.
    pub sigma: f64,
    /// Minimizing direction of the search.
    pub direction: Point,
    /// `1 / max_{s∈{±1}ⁿ} |F⁻¹ s|`.
    pub sigma_exact: f64,
    /// The searched minimum is positive.
    pub pass: bool,
}

fn check_vertices(vertices: &[Point]) -> Result<usize> {
    let n = vertices.len().checked_sub(1).filter(|&n| n >= 1).ok_or(Error::EmptySet)?;
    if let Some(v) = vertices.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    Ok(n)
}

/// Inward unit normal of the facet opposite `vertices[i]`, with a point on it.
fn facet(vertices: &[Point], i: usize) -> Result<(Point, Point)> {
    let others: Vec<&Point> = vertices.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, v)| v).collect();
    let edges: Vec<Point> = others[1..].iter().map(|v| sub(v, others[0])).collect();
    let mut f = normalize(&orthogonal_complement(&edges)).ok_or_else(|| Error::Degenerate("flat simplex".into()))?;
    let h = dot(&f, &sub(&vertices[i], others[0]));
    if h.abs() < 1e-14 {
        return Err(Error::Degenerate("flat simplex".into()));
    }
    if h < 0.0 {
        f = scale(&f, -1.0);
    }
    Ok((f, others[0].clone()))
}

fn facets(vertices: &[Point]) -> Result<Vec<(Point, Point)>> {
    (0..vertices.len()).map(|i| facet(vertices, i)).collect()
}

/// Inradius and circumradius about the vertex centroid.
fn radii(vertices: &[Point], fs: &[(Point, Point)]) -> (Point, f64, f64) {
    let u = centroid(vertices);
    let inr = fs.iter().map(|(f, p)| dot(f, &sub(&u, p))).fold(f64::INFINITY, f64::min);
    let outr = vertices.iter().map(|v| dist(v, &u)).fold(0.0, f64::max);
    (u, inr, outr)
}

fn require_sandwich(vertices: &[Point], fs: &[(Point, Point)], r: f64) -> Result<Point> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r = {r} must be at least 1")));
    }
    let (u, inr, outr) = radii(vertices, fs);
    if inr * r < 1.0 - 1e-12 || outr > r * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "B(u, 1/{r}) ⊂ S ⊂ B(u, {r}) fails: inradius {inr}, circumradius {outr}"
        )));
    }
    Ok(u)
}

/// `1 / max_{s∈{±1}ⁿ} |F⁻¹ s|` for the matrix with rows `f_1, …, f_n`: the
/// parallelotope `{v : |⟨f_i, v⟩| ≤ 1}` has its farthest points at the
/// vertices `F⁻¹ s`.
pub fn sigma_exact(normals: &[Point]) -> Result<f64> {
    let n = normals.len();
    if n == 0 || n > 20 {
        return Err(Error::InvalidParameter(format!("{n} normals")));
    }
    let mut far = 0.0f64;
    for mask in 0..1u32 << n {
        let s: Vec<f64> = (0..n).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let v = solve(normals, &s).ok_or_else(|| Error::Degenerate("dependent normals".into()))?;
        far = far.max(norm(&v));
    }
    Ok(1.0 / far)
}

fn trial_directions(n: usize, count: usize) -> Vec<Point> {
    match n {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            (0..count).map(|_| random_unit(n, &mut rng)).collect()
        }
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Tangent basis at the unit vector `v`.
fn tangents(v: &[f64]) -> Vec<Point> {
    let n = v.len();
    let mut basis: Vec<Point> = vec![v.to_vec()];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        for b in &basis {
            e = axpy(&e, -dot(&e, b), b);
        }
        if let Some(u) = normalize(&e).filter(|_| norm(&e) > 1e-6) {
            basis.push(u);
        }
        if basis.len() == n {
            break;
        }
    }
    basis.split_off(1)
}

/// Facet normals of the simplex with the given `n + 1` vertices and the
/// smallest normal-projection constant `σ` over the faces `1..=n`.
///
/// Requires `B(u, 1/r) ⊂ S ⊂ B(u, r)` about the vertex centroid `u`.
pub fn check_simplex_normals(vertices: &[Point], r: f64) -> Result<SimplexNormals> {
    let n = check_vertices(vertices)?;
    let fs = facets(vertices)?;
    require_sandwich(vertices, &fs, r)?;
    let normals: Vec<Point> = fs.into_iter().map(|(f, _)| f).collect();
    let used = &normals[1..];
    let g = |v: &[f64]| used.iter().map(|f| dot(f, v).abs()).fold(0.0, f64::max);
    let mut best = trial_directions(n, SIGMA_DIRECTIONS)
        .into_iter()
        .map(|v| (g(&v), v))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("nonempty direction set");
    // the grid spacing bounds how far the true minimizer can sit
    let mut width = match n {
        1 => 0.0,
        2 => std::f64::consts::PI / SIGMA_DIRECTIONS as f64,
        _ => 4.0 * (SIGMA_DIRECTIONS as f64).powf(-1.0 / (n - 1) as f64),
    };
    for _ in 0..3 {
        for e in tangents(&best.1) {
            let along = |s: f64| normalize(&axpy(&scale(&best.1, s.cos()), s.sin(), &e)).expect("unit");
            let s = golden_section(|s| g(&along(s)), -width, width, 60);
            let v = along(s);
            let gv = g(&v);
            if gv < best.0 {
                best = (gv, v);
            }
        }
        width *= 0.5;
    }
    let exact = sigma_exact(used)?;
    Ok(SimplexNormals { sigma: best.0, direction: best.1, sigma_exact: exact, pass: best.0 > 0.0, normals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    /// The sampled extreme of the checked quantity.
    pub measured: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConelikeBall {
    pub center: Point,
    pub radius: f64,
    pub properties: Vec<PropertyCheck>,
}

impl ConelikeBall {
    pub fn all_pass(&self) -> bool {
        self.properties.iter().all(|p| p.pass)
    }

    /// Whether `x` lies in the constructed set.
    pub fn contains(&self, x: &[f64]) -> bool {
        dist(x, &self.center) <= self.radius * (1.0 + 1e-12)
    }
}

/// The ball `X = B(w + f/(2r), σ/(4r))` for the hyperplane `H` through `w`
/// with unit normal `f`, checked on `samples` interior and `samples` surface
/// points for:
///
/// 1. `X ⊂ w + (1 - 1/(8r²)) (B(0, 1/r) ∩ {⟨v, f⟩ ≥ 0})`,
/// 2. at least half of `X` has `⟨x - w, y_1⟩ ≥ 0`,
/// 3. `⟨x - w, y_2⟩ ≥ (σ/4) |x - w| |y_2|` on `X`,
/// 4. `|x - w| ≥ 1/(4r)` on `X`.
#[allow(clippy::too_many_arguments)]
pub fn construct_conelike_ball(
    w: &[f64],
    f: &[f64],
    r: f64,
    sigma: f64,
    y1: &[f64],
    y2: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ConelikeBall> {
    let n = w.len();
    for v in [f, y1, y2] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    if (norm(f) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("f must be a unit vector".into()));
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r = {r} must be at least 1")));
    }
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::InvalidParameter(format!("σ = {sigma} outside (0, 1]")));
    }
    let (n1, n2) = (norm(y1), norm(y2));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::InvalidParameter("y_1 and y_2 must be nonzero".into()));
    }
    if norm(w) > r {
        return Err(Error::Precondition(format!("|w| = {} exceeds r = {r}", norm(w))));
    }
    if dot(y1, f) / n1 < 0.0 {
        return Err(Error::Precondition(format!("⟨y_1, f⟩/|y_1| = {} < 0", dot(y1, f) / n1)));
    }
    if dot(y2, f) / n2 < sigma {
        return Err(Error::Precondition(format!("⟨y_2, f⟩/|y_2| = {} < σ = {sigma}", dot(y2, f) / n2)));
    }
    let center = axpy(w, 0.5 / r, f);
    let radius = sigma / (4.0 * r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior: Vec<Point> = (0..samples).map(|_| random_in_ball(&center, radius, &mut rng)).collect();
    let surface: Vec<Point> = (0..samples).map(|_| axpy(&center, radius, &random_unit(n, &mut rng))).collect();
    let rel: Vec<Point> = interior.iter().chain(&surface).map(|x| sub(x, w)).collect();

    let outer = (1.0 - 1.0 / (8.0 * r * r)) / r;
    let max_ratio = rel.iter().map(|v| norm(v) / outer).fold(0.0, f64::max);
    let min_side = rel.iter().map(|v| dot(v, f)).fold(f64::INFINITY, f64::min);
    let frac = rel[..samples].iter().filter(|v| dot(v, y1) >= 0.0).count() as f64 / samples.max(1) as f64;
    let cone_slack = rel.iter().map(|v| dot(v, y2) - sigma / 4.0 * norm(v) * n2).fold(f64::INFINITY, f64::min);
    let min_dist = rel.iter().map(|v| norm(v)).fold(f64::INFINITY, f64::min);
    let noise = 3.0 / (2.0 * (samples.max(1) as f64).sqrt());
    let properties = vec![
        PropertyCheck {
            name: "inside scaled half ball".into(),
            pass: max_ratio <= 1.0 + 1e-12 && min_side >= -1e-12,
            measured: max_ratio,
            bound: 1.0,
        },
        PropertyCheck { name: "y1 half mass".into(), pass: frac >= 0.5 - noise, measured: frac, bound: 0.5 },
        PropertyCheck { name: "y2 cone".into(), pass: cone_slack >= -1e-12, measured: cone_slack, bound: 0.0 },
        PropertyCheck {
            name: "distance from w".into(),
            pass: min_dist >= 1.0 / (4.0 * r) - 1e-12,
            measured: min_dist,
            bound: 1.0 / (4.0 * r),
        },
    ];
    Ok(ConelikeBall { center, radius, properties })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacetTouch {
    /// Where the ray from the opposite vertex through the centroid meets the facet.
    pub point: Point,
    /// Sampled points of `B(v, 1/r) ∩ H⁺` outside the simplex.
    pub ball_escapes: usize,
    /// Sampled points of `B(v, 1/r) ∩ H` outside the facet.
    pub disc_escapes: usize,
    /// `max_{p∈F} |p - v| / (2r)`.
    pub facet_ratio: f64,
    pub pass: bool,
}

/// The touch point `v` on the facet opposite `vertices[facet_index]`, with
/// the checks `B(v, 1/r) ∩ H⁺ ⊂ S`, `B(v, 1/r) ∩ H ⊂ F` and `F ⊂ B(v, 2r)`.
pub fn facet_touch_point(vertices: &[Point], facet_index: usize, r: f64, samples: usize, seed: u64) -> Result<FacetTouch> {
    let n = check_vertices(vertices)?;
    if facet_index > n {
        return Err(Error::InvalidParameter(format!("facet index {facet_index} out of range")));
    }
    let fs = facets(vertices)?;
    let u = require_sandwich(vertices, &fs, r)?;
    let (f, on) = &fs[facet_index];
    let apex = &vertices[facet_index];
    let dir = sub(&u, apex);
    let s = dot(f, &sub(on, apex)) / dot(f, &dir);
    let v = axpy(apex, s, &dir);
    let simplex = Polytope::from_vertices(n, vertices.to_vec())?;
    let tol = 1e-9 * r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ball_escapes, mut disc_escapes) = (0, 0);
    for _ in 0..samples {
        let mut p = random_in_ball(&v, 1.0 / r, &mut rng);
        let h = dot(&sub(&p, &v), f);
        if h < 0.0 {
            p = axpy(&p, -2.0 * h, f);
        }
        if !simplex.contains(&p, tol) {
            ball_escapes += 1;
        }
        let q = axpy(&p, -dot(&sub(&p, &v), f), f);
        if !simplex.contains(&q, tol) {
            disc_escapes += 1;
        }
    }
    let facet_ratio = vertices
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != facet_index)
        .map(|(_, p)| dist(p, &v))
        .fold(0.0, f64::max)
        / (2.0 * r);
    Ok(FacetTouch {
        pass: ball_escapes == 0 && disc_escapes == 0 && facet_ratio <= 1.0,
        point: v,
        ball_escapes,
        disc_escapes,
        facet_ratio,
    })
}
