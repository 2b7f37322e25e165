//! Scenario families and their generation as equal-volume voxel pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{dist, norm, random_unit, scale, Point};
use crate::geometry::polytope::Polytope;
use crate::geometry::voxel::VoxelSet;
use crate::reduction::{conelike_from_cone_slice, ConeFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    EllipsoidPair,
    ShearedPolytope,
    DentedConvex,
    #[serde(rename = "interval-union-1d")]
    IntervalUnion1d,
    ConelikePair,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::EllipsoidPair => "ellipsoid-pair",
            Family::ShearedPolytope => "sheared-polytope",
            Family::DentedConvex => "dented-convex",
            Family::IntervalUnion1d => "interval-union-1d",
            Family::ConelikePair => "conelike-pair",
        }
    }

    /// Both bodies are convex, so `γ = 0`.
    pub fn is_convex(self) -> bool {
        matches!(self, Family::EllipsoidPair | Family::ShearedPolytope)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub family: Family,
    pub dim: usize,
    pub t: f64,
    pub perturbation: f64,
    pub h: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Vertices on the unit circle used for planar ellipses.
pub const POLYGON_VERTICES: usize = 512;
/// Sphere points used for ellipsoids in three and four dimensions.
pub const SPHERE_POINTS: usize = 400;
/// Largest fraction of cells that may be trimmed to balance volumes.
pub const MAX_TRIM_FRACTION: f64 = 0.1;

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.t > 0.0 && self.t <= 0.5) {
            return bad(format!("t = {} outside (0, 1/2]", self.t));
        }
        if !(self.h > 0.0) {
            return bad(format!("grid spacing h = {} must be positive", self.h));
        }
        if !(self.perturbation >= 0.0) || !self.perturbation.is_finite() {
            return bad(format!("perturbation {} must be nonnegative", self.perturbation));
        }
        let dims = match self.family {
            Family::EllipsoidPair => 1..=4,
            Family::ShearedPolytope | Family::DentedConvex => 2..=4,
            Family::IntervalUnion1d => 1..=1,
            Family::ConelikePair => 2..=3,
        };
        if !dims.contains(&self.dim) {
            return bad(format!("{} does not support dimension {}", self.family.name(), self.dim));
        }
        Ok(())
    }
}

/// Exact values known for a family, when there is a closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub delta: f64,
    pub gamma: f64,
    pub sym_diff_rel: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    /// Quantity that `δ + γ` is expected to scale with.
    pub delta_scale: f64,
    /// Cells removed from the larger set to balance volumes.
    pub trimmed_cells: u64,
    pub closed_form: Option<ClosedForm>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub a: VoxelSet,
    pub b: VoxelSet,
    /// The convex bodies themselves for convex families.
    pub exact: Option<(Polytope, Polytope)>,
    pub meta: ScenarioMeta,
}

fn voxelize_with<F: Fn(&[f64]) -> bool>(dim: usize, h: f64, lo: &[f64], hi: &[f64], pred: F) -> Result<VoxelSet> {
    let l: Vec<i64> = lo.iter().map(|v| (v / h).floor() as i64 - 1).collect();
    let u: Vec<i64> = hi.iter().map(|v| (v / h).ceil() as i64 + 1).collect();
    VoxelSet::from_predicate(h, vec![0.0; dim], &l, &u, pred)
}

/// Cells whose centers lie in `p`.
pub fn voxelize(p: &Polytope, h: f64) -> Result<VoxelSet> {
    let (lo, hi) = p.bounding_box();
    voxelize_with(p.dim(), h, &lo, &hi, |q| p.contains(q, 0.0))
}

/// Trim the larger set down to the cell count of the smaller one.
fn balance(a: &mut VoxelSet, b: &mut VoxelSet) -> Result<u64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let (na, nb) = (a.cell_count(), b.cell_count());
    let (big, extra) = if na >= nb { (a, na - nb) } else { (b, nb - na) };
    if extra as f64 > MAX_TRIM_FRACTION * big.cell_count() as f64 {
        return Err(Error::Precondition(format!("volumes cannot be balanced: {na} versus {nb} cells")));
    }
    big.trim_highest(extra);
    Ok(extra)
}

fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut basis: Vec<Point> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v = random_unit(n, rng);
        for b in &basis {
            let c = crate::geometry::linalg::dot(&v, b);
            v = crate::geometry::linalg::axpy(&v, -c, b);
        }
        if let Some(u) = crate::geometry::linalg::normalize(&v).filter(|_| norm(&v) > 1e-6) {
            basis.push(u);
        }
    }
    basis
}

/// `R diag(e^{p w}) Rᵀ` with a random rotation `R` and a random unit `w`
/// whose entries sum to zero, so the determinant is one.
fn stretch_matrix(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    if n == 1 {
        return vec![vec![1.0]];
    }
    let mut w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    w.iter_mut().for_each(|x| *x -= mean);
    let w = scale(&w, 1.0 / norm(&w));
    let r = random_rotation(n, rng);
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| r[k][i] * (p * w[k]).exp() * r[k][j]).sum()).collect())
        .collect()
}

fn unit_body(n: usize) -> Result<Polytope> {
    Polytope::ball(n, 1.0, if n == 2 { POLYGON_VERTICES } else { SPHERE_POINTS })
}

/// Build the pair described by `spec`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let (n, h, p) = (spec.dim, spec.h, spec.perturbation);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (a, b, exact, delta_scale, closed_form) = match spec.family {
        Family::EllipsoidPair | Family::ShearedPolytope => {
            let (ca, m) = if spec.family == Family::EllipsoidPair {
                (unit_body(n)?, stretch_matrix(n, p, &mut rng))
            } else {
                let shear = (0..n).map(|i| (0..n).map(|j| f64::from(i == j) + if (i, j) == (0, 1) { p } else { 0.0 }).collect()).collect();
                (Polytope::cuboid(&vec![-1.0; n], &vec![1.0; n])?, shear)
            };
            let cb = ca.map_affine(&m, &vec![0.0; n])?;
            (voxelize(&ca, h)?, voxelize(&cb, h)?, Some((ca, cb)), p * p, None)
        }
        Family::IntervalUnion1d => {
            let g = p;
            let a = voxelize_with(1, h, &[0.0], &[2.0 + g], |x| x[0] < 1.0 || (x[0] > 1.0 + g && x[0] < 2.0 + g))?;
            let b = voxelize_with(1, h, &[0.0], &[2.0], |x| x[0] < 2.0)?;
            let closed = (g <= 1.0).then_some(ClosedForm { delta: spec.t * g / 2.0, gamma: g / 2.0, sym_diff_rel: g });
            (a, b, None, g, closed)
        }
        Family::DentedConvex => {
            if p >= 0.5 {
                return Err(Error::Precondition(format!("dent fraction {p} leaves too little of the ball")));
            }
            let lo = vec![-1.0; n];
            let hi = vec![1.0; n];
            let ball = voxelize_with(n, h, &lo, &hi, |x| norm(x) < 1.0)?;
            let c = random_unit(n, &mut rng);
            let total = ball.cell_count() as f64;
            let removed = |r: f64| ball.filter_centers(|x| dist(x, &c) < r).cell_count() as f64 / total;
            let (mut lo_r, mut hi_r) = (0.0, 2.0);
            for _ in 0..40 {
                let mid = 0.5 * (lo_r + hi_r);
                if removed(mid) < p {
                    lo_r = mid;
                } else {
                    hi_r = mid;
                }
            }
            let r = hi_r;
            let a = ball.filter_centers(|x| dist(x, &c) >= r);
            let radius = (1.0 - removed(r)).powf(1.0 / n as f64) + 2.0 * h;
            let b = voxelize_with(n, h, &scale(&lo, radius), &scale(&hi, radius), |x| norm(x) < radius)?;
            (a, b, None, p, None)
        }
        Family::ConelikePair => {
            let family = ConeFamily::for_dim(n)?;
            let s = family.frame.polytope();
            let a3 = voxelize(&s, h)?;
            let m = stretch_matrix(n, p, &mut rng);
            let b3 = voxelize(&s.map_affine(&m, &vec![0.0; n])?, h)?;
            // the stretched simplex lies between e^{-p} S and e^{p} S up to a
            // factor n from the simplex's eccentricity
            let eta = (n as f64 * p).exp() - 1.0 + 4.0 * h * (n as f64).sqrt();
            let cert = conelike_from_cone_slice(&a3, &b3, &family, 0, eta)?;
            (cert.a, cert.b, None, p, None)
        }
    };
    let (mut a, mut b) = (a, b);
    let trimmed_cells = balance(&mut a, &mut b)?;
    Ok(Scenario { spec: spec.clone(), a, b, exact, meta: ScenarioMeta { delta_scale, trimmed_cells, closed_form } })
}
