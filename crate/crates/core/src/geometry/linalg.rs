//! Small dense vector helpers over `&[f64]` points.
//!
//! Points are plain `Vec<f64>` throughout the crate; the dimension is always
//! small (1 to 4), so these helpers favour clarity over SIMD tricks. Anything
//! needing factorizations goes through `nalgebra`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Point = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Point {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn normalize(a: &[f64]) -> Option<Point> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

pub fn centroid(points: &[Point]) -> Point {
    let dim = points[0].len();
    let mut c = vec![0.0; dim];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    scale(&c, 1.0 / points.len() as f64)
}

/// Determinant of a square matrix given as rows.
pub fn det(rows: &[Point]) -> f64 {
    let n = rows.len();
    match n {
        0 => 1.0,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            let (a, b, c) = (&rows[0], &rows[1], &rows[2]);
            a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0])
        }
        _ => DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant(),
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Signed volume of the simplex `co(p_0, ..., p_n)` in R^n.
pub fn simplex_signed_volume(points: &[Point]) -> f64 {
    let rows: Vec<Point> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    det(&rows) / factorial(rows.len())
}

/// Generalized cross product: a vector orthogonal to the `n - 1` rows given.
/// Its norm is the (n-1)-volume of the parallelotope spanned by the rows.
pub fn orthogonal_complement(rows: &[Point]) -> Point {
    let n = rows.len() + 1;
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let minor: Vec<Point> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect();
        let sign = if (j + n + 1) % 2 == 0 { 1.0 } else { -1.0 };
        *o = sign * det(&minor);
    }
    out
}

/// (k-1)-dimensional volume of a simplex with k vertices embedded in any R^n.
pub fn simplex_measure(points: &[Point]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Point> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&edges[i], &edges[j]));
    gram.determinant().max(0.0).sqrt() / factorial(k)
}

/// Solve `M x = b` for square `M` given as rows.
pub fn solve(rows: &[Point], b: &[f64]) -> Option<Point> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let rhs = nalgebra::DVector::from_column_slice(b);
    m.lu().solve(&rhs).map(|x| x.iter().copied().collect())
}

pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Point {
    loop {
        let v: Point = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(u) = normalize(&v) {
            return u;
        }
    }
}

/// Uniform sample from the ball `B(center, radius)`.
pub fn random_in_ball<R: Rng + ?Sized>(center: &[f64], radius: f64, rng: &mut R) -> Point {
    let dim = center.len();
    let dir = random_unit(dim, rng);
    let u: f64 = rng.random::<f64>();
    let r = radius * u.powf(1.0 / dim as f64);
    axpy(center, r, &dir)
}

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / dim as f64 * unit_ball_volume(dim - 2),
    }
}

/// Surface area of the unit sphere S^{n-1}.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_product_matches_3d() {
        let n = orthogonal_complement(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(n, vec![0.0, 0.0, 1.0]);
        let n2 = orthogonal_complement(&[vec![1.0, 0.0]]);
        assert!(dot(&n2, &[1.0, 0.0]).abs() < 1e-15);
        assert!((norm(&n2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simplex_measures() {
        let tri = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert!((simplex_measure(&tri) - 0.5).abs() < 1e-15);
        let tet = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!((simplex_signed_volume(&tet) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
