//! Barycentric transport maps and local Jacobian fits.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::affine::AffineMap;
use crate::geometry::linalg::{add, dist, sub, Point};
use crate::geometry::polytope::Polytope;
use crate::transport::measure::discretize_uniform;
use crate::transport::plan::{solve_ot, OtMode, TransportPlan};

/// Fitted eigenvalues below this are flagged as non-monotone.
pub const NEGATIVE_EIGEN_TOL: f64 = -1e-6;

/// Least-squares affine fit of a map on a neighborhood.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianFit {
    /// Fitted linear part, rows.
    pub matrix: Vec<Point>,
    /// `(M + Mᵀ) / 2`.
    pub symmetric: Vec<Point>,
    /// Eigenvalues of the symmetric part, ascending.
    pub eigenvalues: Vec<f64>,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub neighbors: usize,
    /// Some eigenvalue fell below [`NEGATIVE_EIGEN_TOL`].
    pub negative: bool,
}

impl JacobianFit {
    /// `‖D(T - Id)‖_op` of the symmetrized Jacobian.
    pub fn displacement_opnorm(&self) -> f64 {
        self.eigenvalues.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportMap {
    pub plan: TransportPlan,
    /// Coupling-weighted mean target of every source site.
    pub images: Vec<Point>,
    pub jacobians: Option<Vec<Option<JacobianFit>>>,
}

impl TransportMap {
    pub fn from_plan(plan: TransportPlan) -> Self {
        let dim = plan.source.dim();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); plan.source.len()];
        for &(i, j, w) in &plan.coupling {
            rows[i].push((j, w));
        }
        let images = rows
            .iter()
            .zip(&plan.source.points)
            .map(|(row, p)| match row.as_slice() {
                [] => p.clone(),
                [(j, _)] => plan.target.points[*j].clone(),
                _ => {
                    let mass: f64 = row.iter().map(|r| r.1).sum();
                    let mut img = vec![0.0; dim];
                    for &(j, w) in row {
                        for (a, b) in img.iter_mut().zip(&plan.target.points[j]) {
                            *a += w / mass * b;
                        }
                    }
                    img
                }
            })
            .collect();
        Self { plan, images, jacobians: None }
    }

    pub fn sites(&self) -> &[Point] {
        &self.plan.source.points
    }

    pub fn dim(&self) -> usize {
        self.plan.source.dim()
    }

    /// Index of the nearest source site and its distance.
    pub fn nearest_site(&self, x: &[f64]) -> (usize, f64) {
        self.sites()
            .iter()
            .enumerate()
            .map(|(i, s)| (i, dist(s, x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty source")
    }

    /// Nearest-site extension: `T(x) = x + (T(s) - s)` for the nearest site
    /// `s`. Returns the value and the extension radius `|x - s|`.
    pub fn evaluate(&self, x: &[f64]) -> (Point, f64) {
        let (d, r) = self.displacement(x);
        (add(x, &d), r)
    }

    /// `T(x) - x` under the nearest-site extension, with the extension radius.
    pub fn displacement(&self, x: &[f64]) -> (Point, f64) {
        let (i, r) = self.nearest_site(x);
        (sub(&self.images[i], &self.sites()[i]), r)
    }

    /// Fit Jacobians at every site with neighborhoods of `radius`; sites with
    /// too few neighbors get `None`.
    pub fn compute_jacobians(&mut self, radius: f64) {
        let fits = (0..self.sites().len()).map(|i| jacobian_estimate(self, &self.sites()[i], radius).ok()).collect();
        self.jacobians = Some(fits);
    }

    /// CSV rows `x_1..x_n, t_1..t_n[, lambda_1..lambda_n]`.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut header: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
        header.extend((1..=n).map(|k| format!("t{k}")));
        if self.jacobians.is_some() {
            header.extend((1..=n).map(|k| format!("lambda{k}")));
        }
        let mut s = header.join(",") + "\n";
        for (i, (x, t)) in self.sites().iter().zip(&self.images).enumerate() {
            let mut cols: Vec<String> = x.iter().chain(t).map(|v| format!("{v:e}")).collect();
            if let Some(js) = &self.jacobians {
                match &js[i] {
                    Some(fit) => cols.extend(fit.eigenvalues.iter().map(|v| format!("{v:e}"))),
                    None => cols.extend((0..n).map(|_| "nan".to_string())),
                }
            }
            writeln!(s, "{}", cols.join(",")).expect("write to string");
        }
        s
    }
}

/// Minimum neighbors for a well-posed quadratic-order fit: `(n+1)(n+2)/2`.
pub fn min_neighbors(dim: usize) -> usize {
    (dim + 1) * (dim + 2) / 2
}

/// Least-squares affine fit of the barycentric map on `B(x, radius)`.
pub fn jacobian_estimate(map: &TransportMap, x: &[f64], radius: f64) -> Result<JacobianFit> {
    let dim = map.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    let idx: Vec<usize> = (0..map.sites().len()).filter(|&i| dist(&map.sites()[i], x) <= radius).collect();
    let need = min_neighbors(dim);
    if idx.len() < need {
        return Err(Error::InsufficientSamples(format!("{} sites within radius {radius}, need {need}", idx.len())));
    }
    let k = idx.len();
    let design = DMatrix::from_fn(k, dim + 1, |r, c| if c == dim { 1.0 } else { map.sites()[idx[r]][c] - x[c] });
    let svd = design.clone().svd(true, true);
    let mut matrix = vec![vec![0.0; dim]; dim];
    let mut sq = 0.0;
    for out in 0..dim {
        let rhs = DVector::from_fn(k, |r, _| map.images[idx[r]][out]);
        let coef = svd.solve(&rhs, 1e-12).map_err(|e| Error::Degenerate(e.to_string()))?;
        for c in 0..dim {
            matrix[out][c] = coef[c];
        }
        sq += (&design * &coef - rhs).norm_squared();
    }
    let sym = DMatrix::from_fn(dim, dim, |r, c| 0.5 * (matrix[r][c] + matrix[c][r]));
    let eig = SymmetricEigen::new(sym.clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let negative = eigenvalues.iter().any(|&l| l < NEGATIVE_EIGEN_TOL);
    Ok(JacobianFit {
        symmetric: (0..dim).map(|r| (0..dim).map(|c| sym[(r, c)]).collect()).collect(),
        matrix,
        eigenvalues,
        residual: (sq / k as f64).sqrt(),
        neighbors: k,
        negative,
    })
}

/// Transport between discretizations of `Q(C_A)` and `Q(C_B)`.
///
/// Returns the map together with `θ = max(‖Q‖, ‖Q⁻¹‖)`.
pub fn affine_conjugate_transport(
    c_a: &Polytope,
    c_b: &Polytope,
    q: &AffineMap,
    count: usize,
    seed: u64,
) -> Result<(TransportMap, f64)> {
    let theta = q.operator_norm().max(q.inverse()?.operator_norm());
    // affine images of uniform measures are uniform on the image bodies, so
    // sampling happens in the original coordinates (well conditioned even
    // for very anisotropic Q)
    let mu = discretize_uniform(c_a, count, seed)?.map(|p| q.apply(p));
    let nu = discretize_uniform(c_b, count, seed)?.map(|p| q.apply(p));
    let plan = solve_ot(&mu, &nu, OtMode::Auto)?;
    Ok((TransportMap::from_plan(plan), theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::measure::DiscreteMeasure;

    fn disc(n: usize, seed: u64) -> DiscreteMeasure {
        discretize_uniform(&Polytope::regular_polygon(64, 1.0).unwrap(), n, seed).unwrap()
    }

    #[test]
    fn identity_map_has_unit_eigenvalues() {
        let mu = disc(300, 1);
        let map = TransportMap::from_plan(solve_ot(&mu, &mu, OtMode::Exact).unwrap());
        for (s, t) in map.sites().iter().zip(&map.images) {
            assert!(dist(s, t) < 1e-9);
        }
        let fit = jacobian_estimate(&map, &[0.0, 0.0], 0.4).unwrap();
        for l in &fit.eigenvalues {
            assert!((l - 1.0).abs() < 1e-9);
        }
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn linear_ground_truth_is_recovered() {
        let mu = disc(400, 2);
        let nu = mu.map(|p| vec![2.0 * p[0], 0.5 * p[1]]);
        let map = TransportMap::from_plan(solve_ot(&mu, &nu, OtMode::Exact).unwrap());
        let fit = jacobian_estimate(&map, &[0.1, -0.1], 0.5).unwrap();
        assert!((fit.eigenvalues[0] - 0.5).abs() < 1e-9 && (fit.eigenvalues[1] - 2.0).abs() < 1e-9, "{fit:?}");
        assert!(!fit.negative);
    }

    #[test]
    fn translation_has_zero_residual() {
        let mu = disc(200, 3);
        let nu = mu.map(|p| vec![p[0] + 3.0, p[1] - 1.0]);
        let map = TransportMap::from_plan(solve_ot(&mu, &nu, OtMode::Exact).unwrap());
        let fit = jacobian_estimate(&map, &[0.0, 0.0], 0.5).unwrap();
        assert!(fit.residual < 1e-12 && fit.displacement_opnorm() < 1e-9);
        let (t, r) = map.evaluate(&[0.95, 0.0]);
        assert!((t[0] - 3.95).abs() < 1e-12 && r < 0.2);
    }

    #[test]
    fn too_few_neighbors() {
        let mu = disc(50, 4);
        let map = TransportMap::from_plan(solve_ot(&mu, &mu, OtMode::Exact).unwrap());
        assert!(matches!(jacobian_estimate(&map, &[0.0, 0.0], 1e-3), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn images_are_convex_combinations() {
        let mu = disc(60, 5);
        let nu = discretize_uniform(&Polytope::cuboid(&[0.0, 0.0], &[2.0, 1.0]).unwrap(), 45, 6).unwrap();
        let map = TransportMap::from_plan(solve_ot(&mu, &nu, OtMode::Exact).unwrap());
        let hull = Polytope::from_vertices(2, nu.points.clone()).unwrap();
        assert!(map.images.iter().all(|t| hull.contains(t, 1e-9)));
        let csv = map.to_csv();
        assert!(csv.starts_with("x1,x2,t1,t2\n"));
    }

    #[test]
    fn affine_conjugates() {
        let sq = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let (same, _) = affine_conjugate_transport(&sq, &sq, &AffineMap::linear(vec![vec![3.0, 1.0], vec![0.0, 0.5]]), 120, 7).unwrap();
        assert!(same.plan.cost < 1e-20);
        let rect = Polytope::cuboid(&[-2.0, -0.5], &[2.0, 0.5]).unwrap();
        let (id_map, theta) = affine_conjugate_transport(&sq, &rect, &AffineMap::identity(2), 150, 7).unwrap();
        assert!((theta - 1.0).abs() < 1e-12);
        let direct = solve_ot(&discretize_uniform(&sq, 150, 7).unwrap(), &discretize_uniform(&rect, 150, 7).unwrap(), OtMode::Exact).unwrap();
        assert_eq!(direct.cost, id_map.plan.cost);
        let (c, s) = (0.6f64, 0.8f64);
        let rot = AffineMap::linear(vec![vec![c, -s], vec![s, c]]);
        let (rot_map, theta) = affine_conjugate_transport(&sq, &rect, &rot, 150, 7).unwrap();
        assert!((theta - 1.0).abs() < 1e-9);
        // paired seeds: rotating both bodies leaves the cost unchanged
        assert!((id_map.plan.cost - rot_map.plan.cost).abs() < 1e-9 * id_map.plan.cost);
    }
}
