//! Dimensionless diagnostics along the chain of estimates in the main
//! proposition, evaluated for the discrete transport between two hulls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::deficit::{bm_deficit, hull_gap};
use crate::geometry::linalg::{norm, unit_ball_volume};
use crate::geometry::mesh::boundary_quadrature;
use crate::geometry::polytope::Polytope;
use crate::geometry::voxel::VoxelSet;
use crate::transport::{discretize_uniform, e_region, eigen_deficit, min_neighbors, solve_ot, OtMode, TransportMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainPropOptions {
    /// Sites per discretized hull.
    pub sites: usize,
    pub seed: u64,
    /// Number of `o'` points drawn in `(1-ε)C_A`.
    pub o_grid: usize,
    /// Boundary mesh refinement for the transport integral.
    pub refinement: usize,
    /// `(δ, γ)` measured elsewhere, e.g. exactly for convex polytopes;
    /// computed from the voxel sets when absent.
    pub known_deficits: Option<(f64, f64)>,
}

impl Default for MainPropOptions {
    fn default() -> Self {
        Self { sites: 800, seed: 0, o_grid: 9, refinement: 24, known_deficits: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub name: String,
    pub value: f64,
    /// `value / (√((δ+γ)/t) |A|)`; `None` when the scale vanishes.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainPropReport {
    pub delta: f64,
    pub gamma: f64,
    pub scale: f64,
    /// Sites whose Jacobian fit failed or had a nonpositive eigenvalue.
    pub skipped_sites: usize,
    pub rows: Vec<DiagnosticRow>,
}

impl MainPropReport {
    pub fn row(&self, name: &str) -> Option<&DiagnosticRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Tab-separated table of names, values and ratios.
    pub fn to_table(&self) -> String {
        let mut s = String::from("diagnostic\tvalue\tratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map_or("-".to_string(), |v| format!("{v:.6e}"));
            s.push_str(&format!("{}\t{:.6e}\t{ratio}\n", r.name, r.value));
        }
        s
    }
}

/// Evaluate the five quantities of the proof chain:
///
/// * `eigen_deficit`: `∫_E ∏(t + (1-t)λ_i) - 1` over the site-level E-region,
/// * `opnorm_integral`: `∫_{C_A} ‖D(T - Id)‖_op`,
/// * `opnorm_sup`: the sup of the same over `(1-ε/2)C_A`,
/// * `origin_shift`: `|T(o) - o|` at the origin,
/// * `boundary_integral`: the largest `∫_{∂C_A} max{⟨x - T(x), u⟩, 0}` over
///   the `o'` grid.
///
/// Shrunken copies are taken about the centroid of `C_A`. Requires
/// `δ + γ ≤ t^{2n-1}/2` with `δ` the Brunn-Minkowski deficit and `γ` the
/// sum of the hull gaps of `A` and `B`.
#[allow(clippy::too_many_arguments)]
pub fn mainprop_diagnostics(
    a: &VoxelSet,
    b: &VoxelSet,
    c_a: &Polytope,
    c_b: &Polytope,
    t: f64,
    eps: f64,
    ell: f64,
    opts: &MainPropOptions,
) -> Result<MainPropReport> {
    let n = a.dim();
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} outside (0, 1)")));
    }
    if !(ell >= 1.0) {
        return Err(Error::InvalidParameter(format!("ℓ = {ell} must be at least 1")));
    }
    let (delta, gamma) = match opts.known_deficits {
        Some((d, g)) => (d.max(0.0), g.max(0.0)),
        None => (bm_deficit(a, b, t)?.value.max(0.0), hull_gap(a)?.value + hull_gap(b)?.value),
    };
    let limit = 0.5 * t.powi(2 * n as i32 - 1);
    if delta + gamma > limit {
        return Err(Error::Precondition(format!("δ + γ = {} exceeds t^(2n-1)/2 = {limit}", delta + gamma)));
    }
    // same seed on both sides: identical hulls give the identity coupling
    let mu = discretize_uniform(c_a, opts.sites, opts.seed)?;
    let nu = discretize_uniform(c_b, opts.sites, opts.seed)?;
    let mut map = TransportMap::from_plan(solve_ot(&mu, &nu, OtMode::Auto)?);
    let vol = c_a.volume();
    let k = 4 * min_neighbors(n);
    let radius = (k as f64 * vol / (opts.sites as f64 * unit_ball_volume(n))).powf(1.0 / n as f64);
    map.compute_jacobians(radius);
    let fits = map.jacobians.clone().unwrap_or_default();

    let in_e = e_region(&map, b, c_a, eps);
    let middle = c_a.scale_about(&c_a.centroid(), 1.0 - eps / 2.0);
    let per_site = vol / map.sites().len() as f64;
    let (mut deficit, mut opnorm, mut sup) = (0.0, 0.0, 0.0f64);
    let mut skipped = 0;
    for ((site, fit), e) in map.sites().iter().zip(&fits).zip(&in_e) {
        let Some(fit) = fit.as_ref().filter(|f| f.eigenvalues.iter().all(|&l| l > 0.0)) else {
            skipped += 1;
            continue;
        };
        let op = fit.displacement_opnorm();
        opnorm += per_site * op;
        if *e {
            deficit += per_site * eigen_deficit(&fit.eigenvalues, t)?;
        }
        if middle.contains(site, 0.0) {
            sup = sup.max(op);
        }
    }
    let origin = vec![0.0; n];
    let shift = norm(&map.displacement(&origin).0);

    let mesh = boundary_quadrature(c_a, opts.refinement)?;
    let inner = c_a.scale_about(&c_a.centroid(), 1.0 - eps);
    let grid = discretize_uniform(&inner, opts.o_grid.max(1), opts.seed ^ 0x9e37)?;
    let mut boundary: f64 = 0.0;
    for o in &grid.points {
        boundary = boundary.max(crate::transport::boundary_transport_integral(&map, c_a, o, &mesh)?.value);
    }

    let scale = ((delta + gamma) / t).sqrt() * a.volume();
    let ratio = |v: f64| if scale > 0.0 { Some(v / scale) } else { None };
    let rows = [
        ("eigen_deficit", deficit),
        ("opnorm_integral", opnorm),
        ("opnorm_sup", sup),
        ("origin_shift", shift),
        ("boundary_integral", boundary),
    ]
    .into_iter()
    .map(|(name, value)| DiagnosticRow { name: name.into(), value, ratio: ratio(value) })
    .collect();
    Ok(MainPropReport { delta, gamma, scale, skipped_sites: skipped, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn voxelize(p: &Polytope, h: f64) -> VoxelSet {
        let (lo, hi) = p.bounding_box();
        let l: Vec<i64> = lo.iter().map(|v| (v / h).floor() as i64 - 1).collect();
        let u: Vec<i64> = hi.iter().map(|v| (v / h).ceil() as i64 + 1).collect();
        VoxelSet::from_predicate(h, vec![0.0; p.dim()], &l, &u, |q| p.contains(q, 0.0)).unwrap()
    }

    fn sheared_pair(s: f64, h: f64) -> (VoxelSet, VoxelSet, Polytope, Polytope) {
        let c_a = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let c_b = c_a.map_affine(&[vec![1.0, s], vec![0.0, 1.0]], &[0.0, 0.0]).unwrap();
        let a = voxelize(&c_a, h);
        let mut b = voxelize(&c_b, h);
        let extra = b.cell_count() as i64 - a.cell_count() as i64;
        assert!(extra >= 0);
        b.trim_highest(extra as u64);
        (a, b, c_a, c_b)
    }

    #[test]
    fn identical_convex_bodies_vanish() {
        let c = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let a = voxelize(&c, 0.05);
        let opts = MainPropOptions { sites: 300, ..Default::default() };
        let rep = mainprop_diagnostics(&a, &a, &c, &c, 0.5, 0.5, 2.0, &opts).unwrap();
        assert_eq!(rep.delta + rep.gamma, 0.0);
        for r in &rep.rows {
            assert!(r.value.abs() < 1e-9 && r.ratio.is_none(), "{r:?}");
        }
    }

    #[test]
    fn small_shear_ratios_are_stable() {
        let (a, b, c_a, c_b) = sheared_pair(0.08, 0.02);
        let run = |sites| {
            let opts = MainPropOptions { sites, seed: 4, ..Default::default() };
            mainprop_diagnostics(&a, &b, &c_a, &c_b, 0.5, 0.5, 2.0, &opts).unwrap()
        };
        let (r1, r2) = (run(400), run(800));
        for (x, y) in r1.rows.iter().zip(&r2.rows) {
            let (p, q) = (x.ratio.unwrap(), y.ratio.unwrap());
            assert!(p.is_finite() && q.is_finite());
            if x.name != "eigen_deficit" && x.name != "origin_shift" {
                assert!(p / q < 2.0 && q / p < 2.0, "{x:?} {y:?}");
            }
        }
    }

    #[test]
    fn large_deficit_violates_the_hypothesis() {
        let (a, b, c_a, c_b) = sheared_pair(0.8, 0.05);
        let opts = MainPropOptions { sites: 100, ..Default::default() };
        let err = mainprop_diagnostics(&a, &b, &c_a, &c_b, 0.5, 0.5, 2.0, &opts).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err:?}");
    }
}
