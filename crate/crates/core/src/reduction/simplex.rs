//! The unit-volume regular simplex and the cones over its facets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{dot, factorial, normalize, simplex_signed_volume, sub, Point};
use crate::geometry::polytope::{Halfspace, Polytope};

/// Vertices `e_0, ..., e_n` of a regular simplex of volume one centred at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexFrame {
    pub dim: usize,
    pub vertices: Vec<Point>,
}

impl SimplexFrame {
    pub fn polytope(&self) -> Polytope {
        Polytope::from_vertices(self.dim, self.vertices.clone()).expect("simplex is full-dimensional")
    }

    /// The simplex scaled by `r` about the origin.
    pub fn scaled(&self, r: f64) -> Polytope {
        Polytope::from_vertices(self.dim, self.vertices.iter().map(|v| v.iter().map(|x| r * x).collect()).collect())
            .expect("simplex is full-dimensional")
    }
}

/// Regular simplex of unit volume with centroid at the origin.
///
/// The standard basis of `R^{n+1}` is centred and expressed in an orthonormal
/// basis of the sum-zero hyperplane, then scaled to volume one.
pub fn regular_simplex(n: usize) -> Result<SimplexFrame> {
    if n < 1 {
        return Err(Error::InvalidParameter("simplex dimension must be at least 1".into()));
    }
    let m = n + 1;
    let centred: Vec<Point> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 } - 1.0 / m as f64).collect())
        .collect();
    // Gram-Schmidt on the first n centred vectors spans the hyperplane
    let mut basis: Vec<Point> = Vec::with_capacity(n);
    for v in centred.iter().take(n) {
        let mut r = v.clone();
        for b in &basis {
            let c = dot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
        basis.push(normalize(&r).expect("independent"));
    }
    let coords: Vec<Point> = centred.iter().map(|v| basis.iter().map(|b| dot(v, b)).collect()).collect();
    let vol = simplex_signed_volume(&coords).abs();
    let s = vol.powf(-1.0 / n as f64);
    let vertices = coords.into_iter().map(|p| p.into_iter().map(|x| x * s).collect()).collect();
    Ok(SimplexFrame { dim: n, vertices })
}

/// The `n + 1` cones over the facets of a regular simplex.
#[derive(Clone, Debug)]
pub struct ConeFamily {
    pub frame: SimplexFrame,
    /// `cones[i]`: the halfspaces `<p, e_i - e_j> <= 0`, `j != i`, cutting out
    /// the cone through the facet opposite `e_i`.
    pub cones: Vec<Vec<Halfspace>>,
}

impl ConeFamily {
    pub fn new(frame: SimplexFrame) -> Self {
        let e = &frame.vertices;
        let cones = (0..e.len())
            .map(|i| {
                (0..e.len())
                    .filter(|&j| j != i)
                    .map(|j| Halfspace { normal: normalize(&sub(&e[i], &e[j])).expect("distinct"), offset: 0.0 })
                    .collect()
            })
            .collect();
        Self { frame, cones }
    }

    pub fn for_dim(n: usize) -> Result<Self> {
        Ok(Self::new(regular_simplex(n)?))
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frame.dim
    }

    /// `p ∈ C_i` up to absolute tolerance `tol`.
    pub fn contains(&self, i: usize, p: &[f64], tol: f64) -> bool {
        self.cones[i].iter().all(|h| h.excess(p) <= tol)
    }

    /// Centroid of the facet opposite `e_i`.
    pub fn facet_centroid(&self, i: usize) -> Point {
        let e = &self.frame.vertices;
        let k = (e.len() - 1) as f64;
        (0..self.dim()).map(|c| e.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v[c]).sum::<f64>() / k).collect()
    }
}

/// Index of a cone containing `p`: the `i` minimising `<p, e_i>`, smallest
/// index on ties. The origin lies in every cone and gets index 0.
pub fn cone_membership(family: &ConeFamily, p: &[f64]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, e) in family.frame.vertices.iter().enumerate() {
        let v = dot(p, e);
        if v < best.0 {
            best = (v, i);
        }
    }
    best.1
}

/// Volume of the simplex spanned by the frame, for invariant checks.
pub fn frame_volume(frame: &SimplexFrame) -> f64 {
    simplex_signed_volume(&frame.vertices).abs()
}

/// Volume of the unit-side regular `n`-simplex, `sqrt(n + 1) / (n! 2^{n/2})`.
pub fn unit_side_simplex_volume(n: usize) -> f64 {
    ((n + 1) as f64).sqrt() / (factorial(n) * 2f64.powf(n as f64 / 2.0))
}
