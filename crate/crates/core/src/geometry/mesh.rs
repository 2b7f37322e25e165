//! Boundary quadrature meshes for full-dimensional polytopes.

use crate::error::{Error, Result};
use crate::geometry::linalg::{centroid, dist, simplex_measure, Point};
use crate::geometry::polytope::Polytope;

#[derive(Clone, Debug)]
pub struct MeshFacet {
    /// Simplex vertices (`n` of them in `R^n`).
    pub vertices: Vec<Point>,
    /// `(n-1)`-dimensional measure of the simplex.
    pub area: f64,
    pub normal: Point,
}

impl MeshFacet {
    pub fn centroid(&self) -> Point {
        centroid(&self.vertices)
    }

    fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(dist(a, b));
            }
        }
        d
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    pub facets: Vec<MeshFacet>,
    pub total_area: f64,
}

impl BoundaryMesh {
    /// Midpoint-rule quadrature `sum_k area_k * f(centroid_k, facet_k)`.
    pub fn integrate<F>(&self, mut f: F) -> f64
    where
        F: FnMut(&[f64], &MeshFacet) -> f64,
    {
        self.facets.iter().map(|fa| fa.area * f(&fa.centroid(), fa)).sum()
    }

    pub fn max_facet_diameter(&self) -> f64 {
        self.facets.iter().map(MeshFacet::diameter).fold(0.0, f64::max)
    }
}

/// Simplicial boundary mesh with every facet diameter at most
/// `diameter(P) / refinement`.
pub fn boundary_quadrature(p: &Polytope, refinement: usize) -> Result<BoundaryMesh> {
    if !p.is_full_dimensional() {
        return Err(Error::Degenerate("boundary mesh needs a full-dimensional polytope".into()));
    }
    if refinement == 0 {
        return Err(Error::InvalidParameter("refinement must be positive".into()));
    }
    let target = p.diameter() / refinement as f64 * (1.0 + 1e-12);
    let mut facets = Vec::new();
    for b in p.boundary() {
        let verts: Vec<Point> = b.verts.iter().map(|&v| p.boundary_points()[v].clone()).collect();
        match p.dim() {
            1 => facets.push(MeshFacet { vertices: verts, area: 1.0, normal: b.normal.clone() }),
            2 => {
                let pieces = (dist(&verts[0], &verts[1]) / target).ceil().max(1.0) as usize;
                for k in 0..pieces {
                    let at = |s: f64| -> Point {
                        verts[0].iter().zip(&verts[1]).map(|(a, c)| a + s * (c - a)).collect()
                    };
                    let seg = vec![at(k as f64 / pieces as f64), at((k + 1) as f64 / pieces as f64)];
                    facets.push(MeshFacet { area: dist(&seg[0], &seg[1]), vertices: seg, normal: b.normal.clone() });
                }
            }
            _ => bisect(verts, &b.normal, target, &mut facets),
        }
    }
    let total_area = facets.iter().map(|f| f.area).sum();
    Ok(BoundaryMesh { facets, total_area })
}

/// Longest-edge bisection until the simplex diameter is at most `target`.
fn bisect(verts: Vec<Point>, normal: &Point, target: f64, out: &mut Vec<MeshFacet>) {
    let mut stack = vec![verts];
    while let Some(s) = stack.pop() {
        let mut longest = (0.0, 0, 0);
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let d = dist(&s[i], &s[j]);
                if d > longest.0 {
                    longest = (d, i, j);
                }
            }
        }
        if longest.0 <= target {
            let area = simplex_measure(&s);
            if area > 0.0 {
                out.push(MeshFacet { vertices: s, area, normal: normal.clone() });
            }
            continue;
        }
        let (_, i, j) = longest;
        let mid: Point = s[i].iter().zip(&s[j]).map(|(a, b)| 0.5 * (a + b)).collect();
        let mut left = s.clone();
        left[j] = mid.clone();
        let mut right = s;
        right[i] = mid;
        stack.push(left);
        stack.push(right);
    }
}
