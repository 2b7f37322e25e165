//! Containment tests between voxel sets and polytopes at grid resolution.
//!
//! A voxel set `X` with spacing `h` lies in a polytope `Q` when every cell
//! center is within `h * sqrt(n)` of `Q` (measured by facet excess). A
//! polytope lies in `X` when its sample points fall in the closed cells of
//! `X` dilated by one spacing per axis.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::polytope::Polytope;
use crate::geometry::voxel::VoxelSet;

/// Result of one containment test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Escape {
    /// Fraction of the inner body's volume found outside the outer one.
    pub fraction: f64,
    /// Largest facet excess (or a 0/1 miss indicator for sampled tests).
    pub worst: f64,
}

impl Escape {
    pub fn within(&self, allowance: f64) -> bool {
        self.fraction <= allowance
    }
}

/// Grid slack `h * sqrt(n)` used for voxel-in-polytope tests.
pub fn grid_slack(x: &VoxelSet) -> f64 {
    x.spacing() * (x.dim() as f64).sqrt()
}

/// Worst facet excess of `p` over `q` (a gauge-free measure of `p ⊄ q`).
fn max_excess(p: &[f64], q: &Polytope) -> f64 {
    q.halfspaces().iter().map(|h| h.excess(p)).fold(f64::NEG_INFINITY, f64::max)
}

/// `X ⊂ Q`: fraction of cells whose centers sit beyond the grid slack.
pub fn voxels_in_polytope(x: &VoxelSet, q: &Polytope) -> Escape {
    let slack = grid_slack(x);
    let (mut bad, mut total, mut worst) = (0u64, 0u64, f64::NEG_INFINITY);
    for c in x.cells() {
        let e = max_excess(&x.cell_center(&c), q);
        worst = worst.max(e);
        total += 1;
        if e > slack {
            bad += 1;
        }
    }
    Escape { fraction: if total == 0 { 0.0 } else { bad as f64 / total as f64 }, worst }
}

/// `P ⊂ X`: fraction of `samples` uniform points of `P` outside the dilated cells.
pub fn polytope_in_voxels<R: Rng + ?Sized>(p: &Polytope, x: &VoxelSet, samples: usize, rng: &mut R) -> Escape {
    let pts = p.sample_uniform(samples, rng);
    let mut vertices_ok = true;
    for v in p.vertices() {
        vertices_ok &= x.contains_point_closed(v, x.spacing());
    }
    let miss = pts.iter().filter(|q| !x.contains_point_closed(q, x.spacing())).count();
    Escape {
        fraction: if pts.is_empty() { 0.0 } else { miss as f64 / pts.len() as f64 },
        worst: if vertices_ok && miss == 0 { 0.0 } else { 1.0 },
    }
}

/// `P ⊂ Q` exactly: `|P \ Q| / |P|` through the intersection volume.
pub fn polytope_in_polytope(p: &Polytope, q: &Polytope) -> Escape {
    let worst = p.vertices().iter().map(|v| max_excess(v, q)).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * p.diameter().max(1.0);
    if worst <= tol {
        return Escape { fraction: 0.0, worst };
    }
    let inside = p.intersection(q).map(|i| i.volume()).unwrap_or(0.0);
    let vp = p.volume();
    Escape { fraction: if vp > 0.0 { ((vp - inside) / vp).max(0.0) } else { 1.0 }, worst }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn voxel_square_in_square() {
        let x = VoxelSet::from_predicate(0.1, vec![0.0, 0.0], &[0, 0], &[10, 10], |_| true).unwrap();
        let q = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(voxels_in_polytope(&x, &q).fraction, 0.0);
        let small = Polytope::cuboid(&[0.0, 0.0], &[0.5, 1.0]).unwrap();
        let e = voxels_in_polytope(&x, &small);
        assert!((e.fraction - 0.4).abs() < 1e-12, "{e:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(polytope_in_voxels(&q, &x, 2000, &mut rng).fraction, 0.0);
        let big = Polytope::cuboid(&[0.0, 0.0], &[2.0, 1.0]).unwrap();
        let e = polytope_in_voxels(&big, &x, 4000, &mut rng);
        assert!((e.fraction - 0.45).abs() < 0.03, "{e:?}");
    }

    #[test]
    fn polytope_pairs() {
        let a = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let b = Polytope::cuboid(&[0.5, 0.0], &[2.0, 1.0]).unwrap();
        assert!((polytope_in_polytope(&a, &b).fraction - 0.5).abs() < 1e-12);
        assert_eq!(polytope_in_polytope(&a, &a.scale_about(&[0.5, 0.5], 1.1)).fraction, 0.0);
    }
}
