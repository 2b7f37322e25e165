//! Integral diagnostics of transport maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{dot, norm, sub, Point};
use crate::geometry::mesh::BoundaryMesh;
use crate::geometry::polytope::Polytope;
use crate::geometry::voxel::VoxelSet;
use crate::transport::map::{jacobian_estimate, TransportMap};

/// `∏ (t + (1-t) λ_i) - 1`.
pub fn eigen_deficit(eigs: &[f64], t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("t = {t} outside [0, 1]")));
    }
    if let Some(l) = eigs.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::InvalidParameter(format!("nonpositive eigenvalue {l}")));
    }
    Ok(eigs.iter().map(|l| t + (1.0 - t) * l).product::<f64>() - 1.0)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn volume_average(values: &[f64], volume: f64) -> Estimate {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    Estimate { value: volume * mean, std_error: volume * (var / k).sqrt(), samples: values.len() }
}

/// `∫_region ‖D(T - Id)‖_op`, averaging fitted Jacobians over the
/// quadrature sites that fall in `region`.
pub fn displacement_opnorm_integral(map: &TransportMap, region: &Polytope, quadrature: &[Point], radius: f64) -> Result<Estimate> {
    let inside: Vec<&Point> = quadrature.iter().filter(|q| region.contains(q, 0.0)).collect();
    if inside.is_empty() {
        return Err(Error::InsufficientSamples("no quadrature site inside the region".into()));
    }
    let mut values = Vec::with_capacity(inside.len());
    for q in inside {
        let fit = jacobian_estimate(map, q, radius)
            .map_err(|e| Error::InsufficientSamples(format!("coverage gap at {q:?}: {e}")))?;
        values.push(fit.displacement_opnorm());
    }
    Ok(volume_average(&values, region.volume()))
}

/// Boundary integral together with the largest nearest-site extension radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryIntegral {
    pub value: f64,
    pub max_extension_radius: f64,
}

/// `∫_{∂C_A} max{⟨x - T(x), (x - o')/|x - o'|⟩, 0} dx` by midpoint quadrature.
pub fn boundary_transport_integral(
    map: &TransportMap,
    c_a: &Polytope,
    o_prime: &[f64],
    mesh: &BoundaryMesh,
) -> Result<BoundaryIntegral> {
    if !c_a.contains(o_prime, 0.0) || c_a.inradius_about(o_prime) < 1e-6 {
        return Err(Error::Precondition("o' must lie in the interior of C_A".into()));
    }
    let mut max_r: f64 = 0.0;
    let value = mesh.integrate(|x, _| {
        let (d, r) = map.displacement(x);
        max_r = max_r.max(r);
        let u = sub(x, o_prime);
        (-dot(&d, &u) / norm(&u)).max(0.0)
    });
    Ok(BoundaryIntegral { value, max_extension_radius: max_r })
}

/// Outcome of the interior regularity comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `L∞((1-ε)C_A)` estimate of `‖D(T - Id)‖_op`.
    pub sup_norm: f64,
    /// `L¹((1-ε/2)C_A)` estimate.
    pub l1_norm: f64,
    /// `sup_norm / l1_norm`; `None` for the `0/0` case, infinite when only
    /// the denominator vanishes.
    pub ratio: Option<f64>,
    pub undefined: bool,
}

impl RegularityReport {
    /// The identity case counts as a pass.
    pub fn passes(&self) -> bool {
        self.undefined || self.ratio.is_some_and(f64::is_finite)
    }
}

/// Homothetic copy of `p` about its centroid.
fn shrink(p: &Polytope, factor: f64) -> Polytope {
    p.scale_about(&p.centroid(), factor)
}

/// Compare the sup and `L¹` norms of `‖D(T - Id)‖_op` on nested shrinkings
/// of `C_A` (about its centroid), using Jacobian fits at the map's sites.
pub fn regularity_ratio(map: &TransportMap, c_a: &Polytope, eps: f64, radius: f64) -> Result<RegularityReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} outside (0, 1)")));
    }
    let inner = shrink(c_a, 1.0 - eps);
    let middle = shrink(c_a, 1.0 - eps / 2.0);
    let (mut sup, mut l1_values) = (0.0f64, Vec::new());
    let mut inner_count = 0;
    for s in map.sites() {
        if !middle.contains(s, 0.0) {
            continue;
        }
        let v = jacobian_estimate(map, s, radius)?.displacement_opnorm();
        l1_values.push(v);
        if inner.contains(s, 0.0) {
            sup = sup.max(v);
            inner_count += 1;
        }
    }
    if inner_count == 0 {
        return Err(Error::InsufficientSamples("no site inside (1-ε)C_A".into()));
    }
    let l1 = volume_average(&l1_values, middle.volume()).value;
    let (ratio, undefined) = if l1 < 1e-12 {
        if sup > 1e-9 {
            (Some(f64::INFINITY), false)
        } else {
            (None, true)
        }
    } else {
        (Some(sup / l1), false)
    };
    Ok(RegularityReport { sup_norm: sup, l1_norm: l1, ratio, undefined })
}

/// Site-level surrogate of `E = (T⁻¹(B) ∩ A) ∪ (1-ε/4)C_A`: a site belongs
/// to `E` when its image lands in `B` or it lies in the shrunken hull.
pub fn e_region(map: &TransportMap, b: &VoxelSet, c_a: &Polytope, eps: f64) -> Vec<bool> {
    let core = shrink(c_a, 1.0 - eps / 4.0);
    map.sites().iter().zip(&map.images).map(|(s, t)| b.contains_point(t) || core.contains(s, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::boundary_quadrature;
    use crate::transport::measure::{discretize_uniform, DiscreteMeasure};
    use crate::transport::plan::TransportPlan;
    use rand::{Rng, SeedableRng};

    fn matched(mu: &DiscreteMeasure, f: impl Fn(&[f64]) -> Point) -> TransportMap {
        TransportMap::from_plan(TransportPlan::matching(mu.clone(), mu.map(f)).unwrap())
    }

    #[test]
    fn eigen_deficit_values() {
        assert_eq!(eigen_deficit(&[1.0, 1.0, 1.0], 0.3).unwrap(), 0.0);
        assert!((eigen_deficit(&[2.0, 0.5], 0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!((eigen_deficit(&[4.0, 0.25], 0.5).unwrap() - 0.5625).abs() < 1e-15);
        assert!(eigen_deficit(&[1.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn eigen_deficit_nonnegative_on_unit_products() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20_000 {
            let n = rng.random_range(1..5);
            let mut l: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0f64..3.0).exp()).collect();
            let p: f64 = l.iter().product();
            l.iter_mut().for_each(|x| *x /= p.powf(1.0 / n as f64));
            assert!(eigen_deficit(&l, rng.random()).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn opnorm_integral_of_linear_map() {
        let body = Polytope::cuboid(&[-0.5, -0.5], &[0.5, 0.5]).unwrap();
        let mu = discretize_uniform(&body, 600, 1).unwrap();
        let quad = discretize_uniform(&body, 50, 2).unwrap().points;
        let id = matched(&mu, |p| p.to_vec());
        assert!(displacement_opnorm_integral(&id, &body, &quad, 0.2).unwrap().value < 1e-9);
        let a = 0.3;
        let lin = matched(&mu, |p| vec![(1.0 + a) * p[0], p[1] / (1.0 + a)]);
        let est = displacement_opnorm_integral(&lin, &body, &quad, 0.2).unwrap();
        assert!((est.value - a.max(1.0 - 1.0 / (1.0 + a))).abs() < 1e-9, "{est:?}");
        let shift = matched(&mu, |p| vec![p[0] + 1.0, p[1]]);
        assert!(displacement_opnorm_integral(&shift, &body, &quad, 0.2).unwrap().value < 1e-9);
    }

    #[test]
    fn boundary_integral_closed_forms() {
        let sq = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let mesh = boundary_quadrature(&sq, 400).unwrap();
        let mu = discretize_uniform(&sq, 300, 3).unwrap();
        let o = [0.0, 0.0];
        let id = matched(&mu, |p| p.to_vec());
        assert_eq!(boundary_transport_integral(&id, &sq, &o, &mesh).unwrap().value, 0.0);
        let a = 0.2;
        let shift = matched(&mu, |p| vec![p[0] - a, p[1]]);
        let got = boundary_transport_integral(&shift, &sq, &o, &mesh).unwrap().value;
        let want = a * (2.0 * 1f64.asinh() + 2.0 * (2f64.sqrt() - 1.0));
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        assert!(boundary_transport_integral(&id, &sq, &[1.0, 0.0], &mesh).is_err());
    }

    #[test]
    fn boundary_integral_of_shrinking_on_disc() {
        let disc = Polytope::regular_polygon(512, 1.0).unwrap();
        let mesh = boundary_quadrature(&disc, 200).unwrap();
        // sites include the quadrature nodes so the extension radius vanishes
        let mut pts = discretize_uniform(&disc, 200, 4).unwrap().points;
        pts.extend(mesh.facets.iter().map(|f| f.centroid()));
        let mu = DiscreteMeasure::uniform(pts).unwrap();
        let s = 0.25;
        let map = matched(&mu, |p| vec![(1.0 - s) * p[0], (1.0 - s) * p[1]]);
        let got = boundary_transport_integral(&map, &disc, &[0.0, 0.0], &mesh).unwrap();
        assert!(got.max_extension_radius < 1e-12);
        let want = s * 2.0 * std::f64::consts::PI;
        assert!((got.value - want).abs() < 1e-3 * want, "{got:?} vs {want}");
    }

    #[test]
    fn regularity_ratio_cases() {
        let body = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let mu = discretize_uniform(&body, 800, 5).unwrap();
        let id = matched(&mu, |p| p.to_vec());
        let r = regularity_ratio(&id, &body, 0.2, 0.25).unwrap();
        assert!(r.undefined && r.passes());
        let lin = matched(&mu, |p| vec![1.5 * p[0], p[1] / 1.5]);
        let r = regularity_ratio(&lin, &body, 0.2, 0.25).unwrap();
        let want = 1.0 / (1.8f64 * 1.8);
        assert!((r.ratio.unwrap() - want).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn e_region_contains_core_sites() {
        let body = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let mu = discretize_uniform(&body, 200, 6).unwrap();
        let far = matched(&mu, |p| vec![p[0] + 10.0, p[1]]);
        let b = VoxelSet::from_predicate(0.1, vec![0.0, 0.0], &[-10, -10], &[10, 10], |_| true).unwrap();
        let e = e_region(&far, &b, &body, 0.4);
        for (s, inside) in far.sites().iter().zip(&e) {
            assert_eq!(*inside, s[0].abs().max(s[1].abs()) <= 0.9);
        }
    }
}
