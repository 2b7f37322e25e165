//! The filling containment `tA + (1-t)B ⊃ t(1-ε/4)C_A + (1-t)C_B` for
//! conelike pairs with a small enough `μ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{add, scale, Point};
use crate::geometry::minkowski::minkowski_combine;
use crate::geometry::polytope::Polytope;
use crate::geometry::voxel::VoxelSet;
use crate::reduction::{condition_three, ConditionReport};

/// Fraction of sampled points allowed to miss the combination (grid error).
pub const ESCAPE_ALLOWANCE: f64 = 1e-3;

/// Largest `μ` with `(ℓ⁻² + 1)⁻¹(1 + μ) ≤ (tε/4)⁻¹(tε(1 + μ)/4 - μ)`.
///
/// With `a = (1 + ℓ⁻²)⁻¹` and `k = 4/(tε)` the inequality reads
/// `kμ ≤ (1 - a)(1 + μ)`, so `μ ≤ (1 - a)/(k - (1 - a))`.
pub fn filling_mu_bound(t: f64, eps: f64, ell: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 0.5) {
        return Err(Error::InvalidParameter(format!("t = {t} outside (0, 1/2]")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} outside (0, 1]")));
    }
    if !(ell > 0.0) {
        return Err(Error::InvalidParameter(format!("ℓ = {ell} must be positive")));
    }
    let a = 1.0 / (1.0 + ell.powi(-2));
    let k = 4.0 / (t * eps);
    let room = k - (1.0 - a);
    if !(room > 0.0) {
        return Err(Error::Precondition(format!("no μ > 0: a = {a}, 4/(tε) = {k}")));
    }
    Ok((1.0 - a) / room)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FillingReport {
    pub pass: bool,
    /// Fraction of sampled right-hand-side points outside `tA + (1-t)B`.
    pub escape_fraction: f64,
    pub mu_bound: f64,
    pub samples: usize,
    pub condition_three: ConditionReport,
}

/// Sample `t(1-ε/4)C_A + (1-t)C_B` and test membership in the computed
/// `tA + (1-t)B`.
///
/// Both sides are compared in the frame of `K`, where condition 3 places
/// `A + x` and `B + y`; the right-hand side there is the hull of the vertex
/// sums moved back by `t x + (1-t) y`.
#[allow(clippy::too_many_arguments)]
pub fn check_filling(
    a: &VoxelSet,
    b: &VoxelSet,
    c_a: &Polytope,
    c_b: &Polytope,
    k: &Polytope,
    x: &[f64],
    y: &[f64],
    t: f64,
    eps: f64,
    ell: f64,
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<FillingReport> {
    let dim = k.dim();
    for d in [a.dim(), b.dim(), c_a.dim(), c_b.dim(), x.len(), y.len()] {
        if d != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: d });
        }
    }
    let mu_bound = filling_mu_bound(t, eps, ell)?;
    if mu > mu_bound {
        return Err(Error::Precondition(format!("μ = {mu} exceeds the filling bound {mu_bound}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cond = condition_three(a, b, c_a, c_b, k, x, y, mu, &mut rng);
    if !cond.pass {
        return Err(Error::Precondition(format!("condition 3 fails: {:?}", cond.checks)));
    }
    let shift = scale(x, -t * eps / 4.0);
    let sa = t * (1.0 - eps / 4.0);
    let mut sums: Vec<Point> = Vec::with_capacity(c_a.vertices().len() * c_b.vertices().len());
    for va in c_a.vertices() {
        for vb in c_b.vertices() {
            sums.push(add(&add(&scale(va, sa), &scale(vb, 1.0 - t)), &shift));
        }
    }
    let rhs = Polytope::from_vertices(dim, sums)?;
    let combo = minkowski_combine(a, b, t)?.set;
    let h = combo.spacing();
    let escaped = rhs.sample_uniform(samples, &mut rng).iter().filter(|p| !combo.contains_point_closed(p, h)).count();
    let escape_fraction = escaped as f64 / samples.max(1) as f64;
    Ok(FillingReport {
        pass: escape_fraction <= ESCAPE_ALLOWANCE,
        escape_fraction,
        mu_bound,
        samples,
        condition_three: cond,
    })
}
