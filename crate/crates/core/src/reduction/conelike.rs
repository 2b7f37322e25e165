//! Conelike certificates and their checker.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::deficit::convex_hull;
use crate::geometry::linalg::{scale, Point};
use crate::geometry::polytope::{ball_sandwich_check, Halfspace, Polytope};
use crate::geometry::voxel::VoxelSet;
use crate::optim::nelder_mead;
use crate::reduction::containment::{polytope_in_polytope, polytope_in_voxels, voxels_in_polytope, Escape};
use crate::reduction::sandwich::sandwich_check;
use crate::reduction::simplex::ConeFamily;

/// Relative volume allowed to escape in each containment test.
pub const ESCAPE_ALLOWANCE: f64 = 1e-3;

/// Uniform samples drawn per polytope-in-voxel containment test.
const SAMPLES: usize = 20_000;

/// A candidate `(γ, ℓ, λ, μ)`-conelike configuration.
#[derive(Clone, Debug)]
pub struct ConelikeCertificate {
    pub a: VoxelSet,
    pub b: VoxelSet,
    pub c_a: Polytope,
    pub c_b: Polytope,
    pub k: Polytope,
    pub s_doubleprime: Polytope,
    pub z: Point,
    pub x: Point,
    pub y: Point,
    pub gamma: f64,
    pub ell: f64,
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: usize,
    pub pass: bool,
    /// Largest escaping fraction (condition 1: largest radius shortfall).
    pub worst_violation: f64,
    /// Individual containments with their escaping fractions.
    pub checks: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConelikeReport {
    pub conditions: Vec<ConditionReport>,
}

impl ConelikeReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn condition(&self, i: usize) -> &ConditionReport {
        &self.conditions[i - 1]
    }
}

fn condition_from(index: usize, checks: Vec<(String, Escape)>) -> ConditionReport {
    let worst = checks.iter().map(|(_, e)| e.fraction).fold(0.0, f64::max);
    ConditionReport {
        condition: index,
        pass: checks.iter().all(|(_, e)| e.within(ESCAPE_ALLOWANCE)),
        worst_violation: worst,
        checks: checks.into_iter().map(|(name, e)| (name, e.fraction)).collect(),
    }
}

/// Test the three conditions of a conelike configuration independently.
pub fn conelike_check(cert: &ConelikeCertificate) -> ConelikeReport {
    let dim = cert.a.dim();
    let origin = vec![0.0; dim];
    let mut rng = ChaCha8Rng::seed_from_u64(0x636f_6e65);

    // (1) B(o, 1/ℓ) ⊂ C_A, C_B ⊂ B(o, ℓ)
    let shortfall = |p: &Polytope| {
        let inner = 1.0 / cert.ell - p.inradius_about(&origin);
        let outer = p.circumradius_about(&origin) - cert.ell;
        inner.max(outer).max(0.0)
    };
    let c1_pass = ball_sandwich_check(&cert.c_a, cert.ell) && ball_sandwich_check(&cert.c_b, cert.ell);
    let c1 = ConditionReport {
        condition: 1,
        pass: c1_pass,
        worst_violation: shortfall(&cert.c_a).max(shortfall(&cert.c_b)),
        checks: vec![("C_A".into(), shortfall(&cert.c_a)), ("C_B".into(), shortfall(&cert.c_b))],
    };

    // (2) S'' ⊂ A - z, C_A - z, B - z, C_B - z ⊂ λ S''
    let inner = cert.s_doubleprime.translate(&cert.z);
    let outer = cert.s_doubleprime.scale_about(&origin, cert.lambda).translate(&cert.z);
    let c2 = condition_from(
        2,
        vec![
            ("S'' in A - z".into(), polytope_in_voxels(&inner, &cert.a, SAMPLES, &mut rng)),
            ("S'' in B - z".into(), polytope_in_voxels(&inner, &cert.b, SAMPLES, &mut rng)),
            ("S'' in C_A - z".into(), polytope_in_polytope(&inner, &cert.c_a)),
            ("S'' in C_B - z".into(), polytope_in_polytope(&inner, &cert.c_b)),
            ("A - z in λS''".into(), voxels_in_polytope(&cert.a, &outer)),
            ("B - z in λS''".into(), voxels_in_polytope(&cert.b, &outer)),
            ("C_A - z in λS''".into(), polytope_in_polytope(&cert.c_a, &outer)),
            ("C_B - z in λS''".into(), polytope_in_polytope(&cert.c_b, &outer)),
        ],
    );

    let c3 = condition_three(&cert.a, &cert.b, &cert.c_a, &cert.c_b, &cert.k, &cert.x, &cert.y, cert.mu, &mut rng);
    ConelikeReport { conditions: vec![c1, c2, c3] }
}

/// Condition 3 alone: `K ⊂ A + x, C_A + x, B + y, C_B + y ⊂ (1+μ)K`.
#[allow(clippy::too_many_arguments)]
pub fn condition_three<R: rand::Rng + ?Sized>(
    a: &VoxelSet,
    b: &VoxelSet,
    c_a: &Polytope,
    c_b: &Polytope,
    k: &Polytope,
    x: &[f64],
    y: &[f64],
    mu: f64,
    rng: &mut R,
) -> ConditionReport {
    let origin = vec![0.0; k.dim()];
    let neg = |v: &[f64]| scale(v, -1.0);
    let big = k.scale_about(&origin, 1.0 + mu);
    let (kx, ky) = (k.translate(&neg(x)), k.translate(&neg(y)));
    let (bx, by) = (big.translate(&neg(x)), big.translate(&neg(y)));
    condition_from(
        3,
        vec![
            ("K in A + x".into(), polytope_in_voxels(&kx, a, SAMPLES, rng)),
            ("K in C_A + x".into(), polytope_in_polytope(&kx, c_a)),
            ("K in B + y".into(), polytope_in_voxels(&ky, b, SAMPLES, rng)),
            ("K in C_B + y".into(), polytope_in_polytope(&ky, c_b)),
            ("A + x in (1+μ)K".into(), voxels_in_polytope(a, &bx)),
            ("C_A + x in (1+μ)K".into(), polytope_in_polytope(c_a, &bx)),
            ("B + y in (1+μ)K".into(), voxels_in_polytope(b, &by)),
            ("C_B + y in (1+μ)K".into(), polytope_in_polytope(c_b, &by)),
        ],
    )
}

/// Approximate Chebyshev center: maximise the inradius from the centroid.
pub fn chebyshev_center(p: &Polytope) -> (Point, f64) {
    let c0 = p.centroid();
    let step = 0.1 * p.diameter();
    let m = nelder_mead(|x| -p.inradius_about(x), &c0, step, 0.0, 400 * (p.dim() + 1));
    let (c, r) = if -m.value > p.inradius_about(&c0) { (m.x, -m.value) } else { (c0.clone(), p.inradius_about(&c0)) };
    (c, r)
}

fn cone_slice(family: &ConeFamily, cone: usize, s: f64) -> Result<Polytope> {
    let mut hs: Vec<Halfspace> = family.frame.scaled(s).halfspaces().to_vec();
    hs.extend(family.cones[cone].iter().cloned());
    Polytope::from_halfspaces(family.dim(), hs)
}

/// Build the certificate of the cone-splitting step for one cone.
///
/// `a3, b3` must be an `η`-sandwich with `(1/(4n³))S ⊂ A³, B³ ⊂ 4n³S`. The
/// pieces `A' ⊃ A³ ∩ C`, `B' ⊃ B³ ∩ C` (all cells meeting `C`), the shared hull
/// `C_A = C_B = co(A' ∪ B') ∩ C ∩ 4n³S ∩ (1+η)K`, the slice
/// `S'' = (1/(4n³))S ∩ C` and `K ∩ C` are shifted so that the Chebyshev
/// center `c` of `S''` becomes the origin; then `z = -c`, `x = y = c`,
/// `λ = (4n³)²`, `μ = η` and `ℓ = 2 max(1/ρ, R)` with `ρ` the inradius of
/// `S''` and `R` the circumradius of `4n³S ∩ C` about `c`.
pub fn conelike_from_cone_slice(
    a3: &VoxelSet,
    b3: &VoxelSet,
    family: &ConeFamily,
    cone: usize,
    eta: f64,
) -> Result<ConelikeCertificate> {
    let dim = family.dim();
    if a3.dim() != dim || b3.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: a3.dim() });
    }
    if cone >= family.len() {
        return Err(Error::InvalidParameter(format!("cone index {cone} out of range")));
    }
    let sw = sandwich_check(a3, b3, eta);
    let (true, Some(k)) = (sw.holds, sw.polytope) else {
        return Err(Error::Precondition(format!("not an η-sandwich: {}", sw.reason.unwrap_or_default())));
    };
    let kn = 4.0 * (dim as f64).powi(3);
    let s_in = cone_slice(family, cone, 1.0 / kn)?;
    let s_out = cone_slice(family, cone, kn)?;
    // every cell meeting the cone, so the pieces cover A³ ∩ C
    let reach = 0.5 * a3.spacing() * (dim as f64).sqrt();
    let meets_cone = |p: &[f64]| family.cones[cone].iter().all(|h| h.excess(p) <= reach);
    let a1 = a3.filter_centers(meets_cone);
    let b1 = a3.resample_onto(b3).filter_centers(meets_cone);
    if a1.is_empty() || b1.is_empty() {
        return Err(Error::EmptySet);
    }
    let k_cone = k.intersection(&cone_slice(family, cone, 2.0 * kn)?)?;
    let envelope = s_out.intersection(&k.scale_about(&vec![0.0; dim], 1.0 + eta))?;
    let c_shared = convex_hull(&a1.union(&b1)?)?.intersection(&envelope)?;

    let (c, rho) = chebyshev_center(&s_in);
    let big_r = s_out.circumradius_about(&c);
    let ell = 2.0 * (1.0 / rho).max(big_r);
    let back = scale(&c, -1.0);
    let c_cert = c_shared.translate(&back);
    let gamma = c_shared.volume() / a1.volume().min(b1.volume()) - 1.0;
    Ok(ConelikeCertificate {
        a: a1.translate(&back),
        b: b1.translate(&back),
        c_a: c_cert.clone(),
        c_b: c_cert,
        k: k_cone,
        s_doubleprime: s_in,
        z: back,
        x: c.clone(),
        y: c,
        gamma: gamma.max(0.0),
        ell,
        lambda: kn * kn,
        mu: eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn voxelized_frame(dim: usize, h: f64) -> VoxelSet {
        let s = ConeFamily::for_dim(dim).unwrap().frame.polytope();
        let (lo, hi) = s.bounding_box();
        let l: Vec<i64> = lo.iter().map(|v| (v / h).floor() as i64 - 1).collect();
        let u: Vec<i64> = hi.iter().map(|v| (v / h).ceil() as i64 + 1).collect();
        VoxelSet::from_predicate(h, vec![0.0; dim], &l, &u, |p| s.contains(p, 0.0)).unwrap()
    }

    #[test]
    fn proof_construction_passes() {
        for (dim, h) in [(2, 0.01), (3, 0.04)] {
            let family = ConeFamily::for_dim(dim).unwrap();
            let x = voxelized_frame(dim, h);
            for cone in 0..family.len() {
                let cert = conelike_from_cone_slice(&x, &x, &family, cone, 0.0).unwrap();
                let rep = conelike_check(&cert);
                assert!(rep.all_pass(), "dim {dim} cone {cone}: {rep:?}");
            }
        }
    }

    #[test]
    fn small_ell_fails_condition_one() {
        let family = ConeFamily::for_dim(2).unwrap();
        let x = voxelized_frame(2, 0.02);
        let mut cert = conelike_from_cone_slice(&x, &x, &family, 1, 0.0).unwrap();
        cert.ell = 1.01;
        let rep = conelike_check(&cert);
        assert!(!rep.condition(1).pass);
        assert!(rep.condition(2).pass && rep.condition(3).pass);
    }

    #[test]
    fn mismatched_envelope_fails_condition_three() {
        let family = ConeFamily::for_dim(2).unwrap();
        let x = voxelized_frame(2, 0.02);
        let mut cert = conelike_from_cone_slice(&x, &x, &family, 0, 0.0).unwrap();
        cert.c_a = cert.c_a.scale_about(&[0.0, 0.0], 1.2);
        cert.mu = 0.0;
        let rep = conelike_check(&cert);
        assert!(!rep.condition(3).pass, "{rep:?}");
    }
}
