//! Weighted point clouds and quasi-uniform discretizations of polytopes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::Point;
use crate::geometry::polytope::Polytope;

/// Finitely supported probability measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates that weights are nonnegative and sum to one within `1e-12`.
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        let dim = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        // summation error of `N` equal weights can exceed 1e-12 on its own
        let tol = 1e-12f64.max(weights.len() as f64 * f64::EPSILON);
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    /// Equal weights `1/N`.
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn mean(&self) -> Point {
        let mut c = vec![0.0; self.dim()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += w * pi;
            }
        }
        c
    }

    /// Largest distance between two sites.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.max(crate::geometry::linalg::dist(p, q));
            }
        }
        d
    }

    /// Push the sites forward by `f`, keeping weights.
    pub fn map(&self, f: impl Fn(&[f64]) -> Point) -> Self {
        Self { points: self.points.iter().map(|p| f(p)).collect(), weights: self.weights.clone() }
    }
}

/// `N` stratified samples of the uniform measure on `P`.
///
/// The bounding box is cut into `k^n` strata with `k^n ≈ N |box| / |P|`; strata
/// are visited in shuffled passes, each visit drawing one jittered point that
/// is kept when it falls in `P`.
pub fn discretize_uniform(p: &Polytope, count: usize, seed: u64) -> Result<DiscreteMeasure> {
    if !p.is_full_dimensional() || p.volume() <= 0.0 {
        return Err(Error::Degenerate("polytope is not full-dimensional".into()));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one site".into()));
    }
    let dim = p.dim();
    let (lo, hi) = p.bounding_box();
    let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let target = count as f64 * box_volume / p.volume();
    let k = (target.powf(1.0 / dim as f64).ceil() as usize).max(1);
    let strata = k.pow(dim as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..strata).collect();
    let mut points = Vec::with_capacity(count);
    'outer: loop {
        order.shuffle(&mut rng);
        for &s in &order {
            let mut idx = s;
            let mut q = Vec::with_capacity(dim);
            for axis in 0..dim {
                let cell = idx % k;
                idx /= k;
                let width = (hi[axis] - lo[axis]) / k as f64;
                q.push(lo[axis] + width * (cell as f64 + rng.random::<f64>()));
            }
            if p.contains(&q, 0.0) {
                points.push(q);
                if points.len() == count {
                    break 'outer;
                }
            }
        }
    }
    DiscreteMeasure::uniform(points)
}
