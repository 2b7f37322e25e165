//! Boundary distance versus symmetric difference, and its pointwise ray claim.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{dist, scale, simplex_measure, Point};
use crate::geometry::mesh::boundary_quadrature;
use crate::geometry::polytope::{ball_sandwich_check, dist_to_convex, Polytope};
use crate::lemmas::LemmaReport;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayCheck {
    pub pass: bool,
    /// `|x - y_x| / (ℓ² d(x, Y))`; zero in the vacuous case `x ∈ Y`.
    pub ratio: f64,
    pub distance: f64,
    pub vacuous: bool,
}

fn require_sandwich(ps: &[&Polytope], ell: f64) -> Result<()> {
    if ps.iter().all(|p| ball_sandwich_check(p, ell)) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("B(o, 1/{ell}) ⊂ X, Y ⊂ B(o, {ell}) fails")))
    }
}

/// For `x ∈ ∂X \ Y`, compare `|x - y_x|` (with `y_x` where the segment `ox`
/// leaves `Y`) against `ℓ² d(x, Y)`.
pub fn check_pointwise_ray(x: &[f64], big_x: &Polytope, y: &Polytope, ell: f64) -> Result<RayCheck> {
    require_sandwich(&[big_x, y], ell)?;
    let gx = big_x.gauge(x)?;
    if (gx - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("x is not on ∂X (gauge {gx})")));
    }
    let gy = y.gauge(x)?;
    if gy <= 1.0 {
        return Ok(RayCheck { pass: true, ratio: 0.0, distance: 0.0, vacuous: true });
    }
    let y_x = scale(x, 1.0 / gy);
    let d = dist_to_convex(x, y);
    let along = dist(x, &y_x);
    let bound = ell * ell * d;
    Ok(RayCheck { pass: along <= bound * (1.0 + 1e-6), ratio: along / bound, distance: d, vacuous: false })
}

/// `count` uniform points on the boundary of a full-dimensional polytope.
pub fn sample_boundary<R: Rng + ?Sized>(p: &Polytope, count: usize, rng: &mut R) -> Vec<Point> {
    let simplices: Vec<Vec<Point>> =
        p.boundary().iter().map(|s| s.verts.iter().map(|&i| p.boundary_points()[i].clone()).collect()).collect();
    let areas: Vec<f64> = simplices.iter().map(|s| simplex_measure(s)).collect();
    let total: f64 = areas.iter().sum();
    (0..count)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < areas.len() && u > areas[k] {
                u -= areas[k];
                k += 1;
            }
            // flat Dirichlet weights from exponential spacings
            let e: Vec<f64> = simplices[k].iter().map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            let mut q = vec![0.0; p.dim()];
            for (v, w) in simplices[k].iter().zip(&e) {
                for (qi, vi) in q.iter_mut().zip(v) {
                    *qi += w / s * vi;
                }
            }
            q
        })
        .collect()
}

/// Convex hull of `m` random points with radii in `[0.8, 0.9] ℓ` and a
/// regular polygon (or cross-polytope in higher dimension) whose inradius
/// exceeds `1/ℓ`; the result is ball-sandwiched with parameter `ℓ`.
pub fn random_sandwiched_polytope<R: Rng + ?Sized>(dim: usize, ell: f64, m: usize, rng: &mut R) -> Result<Polytope> {
    if !(ell > 1.0) {
        return Err(Error::InvalidParameter("ℓ must exceed 1".into()));
    }
    let mut pts: Vec<Point> = (0..m)
        .map(|_| {
            let u = crate::geometry::linalg::random_unit(dim, rng);
            scale(&u, ell * rng.random_range(0.8..0.9))
        })
        .collect();
    let core = 1.1 / ell;
    // a cross-polytope of circumradius c√n has inradius c
    let c = core * (dim as f64).sqrt();
    for k in 0..dim {
        for s in [-1.0, 1.0] {
            let mut v = vec![0.0; dim];
            v[k] = s * c;
            pts.push(v);
        }
    }
    Polytope::from_vertices(dim, pts)
}

/// Check the ray claim on `samples` boundary points of each of `instances`
/// random sandwiched pairs, alternating between the plane and space.
/// The slack of a point is `(ℓ² d - |x - y_x|) / (ℓ² d + |x - y_x|)`.
pub fn scan_ray(instances: usize, samples: usize, ell: f64, seed: u64) -> Result<LemmaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut violations, mut worst) = (0, 0, f64::INFINITY);
    for k in 0..instances {
        let dim = 2 + k % 2;
        let x = random_sandwiched_polytope(dim, ell, 12, &mut rng)?;
        let y = random_sandwiched_polytope(dim, ell, 12, &mut rng)?;
        for p in sample_boundary(&x, samples, &mut rng) {
            let p = scale(&p, 1.0 / x.gauge(&p)?);
            let r = check_pointwise_ray(&p, &x, &y, ell)?;
            checked += 1;
            if !r.pass {
                violations += 1;
            }
            worst = worst.min(if r.vacuous { 1.0 } else { (1.0 - r.ratio) / (1.0 + r.ratio) });
        }
    }
    Ok(LemmaReport {
        lemma: "ray".into(),
        params: serde_json::json!({ "instances": instances, "samples_per_instance": samples, "ell": ell, "seed": seed }),
        samples: checked,
        violations,
        worst_slack: worst,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdReport {
    pub sym_diff: f64,
    /// `∫_{∂X} d(x, Y) dx`.
    pub boundary_integral: f64,
    /// `sym_diff / boundary_integral`; `None` when both vanish.
    pub ratio: Option<f64>,
}

/// `|X △ Y|` against `∫_{∂X} d(x, Y)` for equal-volume sandwiched bodies.
pub fn check_sd_vs_distance(x: &Polytope, y: &Polytope, ell: f64, refinement: usize) -> Result<SdReport> {
    require_sandwich(&[x, y], ell)?;
    let (vx, vy) = (x.volume(), y.volume());
    if (vx - vy).abs() > 1e-6 * vx {
        return Err(Error::VolumeMismatch { a: vx, b: vy });
    }
    let inter = x.intersection(y).map(|p| p.volume()).unwrap_or(0.0);
    let sym_diff = (vx + vy - 2.0 * inter).max(0.0);
    let mesh = boundary_quadrature(x, refinement)?;
    let boundary_integral = mesh.integrate(|p, _| dist_to_convex(p, y));
    let ratio = if sym_diff <= 1e-12 * vx && boundary_integral <= 1e-12 { None } else { Some(sym_diff / boundary_integral) };
    Ok(SdReport { sym_diff, boundary_integral, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_bodies_are_vacuous() {
        let p = Polytope::regular_polygon(12, 1.0).unwrap();
        let x = p.vertices()[0].clone();
        let r = check_pointwise_ray(&x, &p, &p, 2.0).unwrap();
        assert!(r.pass && r.vacuous && r.ratio == 0.0);
        let sd = check_sd_vs_distance(&p, &p, 2.0, 20).unwrap();
        assert_eq!(sd.ratio, None);
    }

    #[test]
    fn concentric_balls() {
        let s = 0.1;
        let outer = Polytope::regular_polygon(4096, 1.0).unwrap();
        let inner = Polytope::regular_polygon(4096, 1.0 - s).unwrap();
        let x = outer.vertices()[17].clone();
        let r = check_pointwise_ray(&x, &outer, &inner, 2.0).unwrap();
        assert!(r.pass);
        assert!((r.distance - s).abs() < 1e-6);
        assert!((r.ratio * 4.0 - 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn random_polygon_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ell = 3.0;
        for _ in 0..20 {
            let x = random_sandwiched_polytope(2, ell, 9, &mut rng).unwrap();
            let y = random_sandwiched_polytope(2, ell, 9, &mut rng).unwrap();
            for p in sample_boundary(&x, 50, &mut rng) {
                let p = scale(&p, 1.0 / x.gauge(&p).unwrap());
                assert!(check_pointwise_ray(&p, &x, &y, ell).unwrap().pass);
            }
        }
    }

    #[test]
    fn rotated_square_ratio_is_stable() {
        let sq = Polytope::cuboid(&[-0.5, -0.5], &[0.5, 0.5]).unwrap();
        let rot = |rho: f64| {
            let (c, s) = (rho.cos(), rho.sin());
            sq.map_affine(&[vec![c, -s], vec![s, c]], &[0.0, 0.0]).unwrap()
        };
        let r1 = check_sd_vs_distance(&sq, &rot(0.04), 2.0, 200).unwrap();
        let r2 = check_sd_vs_distance(&sq, &rot(0.02), 2.0, 200).unwrap();
        let (a, b) = (r1.ratio.unwrap(), r2.ratio.unwrap());
        assert!(r1.sym_diff > r2.sym_diff && a / b < 2.0 && b / a < 2.0, "{r1:?} {r2:?}");
    }

    #[test]
    fn scan_reports_every_point() {
        let rep = scan_ray(4, 25, 3.0, 1).unwrap();
        assert_eq!((rep.samples, rep.violations), (100, 0));
        assert!(rep.worst_slack > 0.0);
        assert_eq!(rep, scan_ray(4, 25, 3.0, 1).unwrap());
    }

    #[test]
    fn sandwich_violation_is_rejected() {
        let big = Polytope::regular_polygon(8, 5.0).unwrap();
        let x = big.vertices()[0].clone();
        assert!(check_pointwise_ray(&x, &big, &big, 2.0).is_err());
    }
}
