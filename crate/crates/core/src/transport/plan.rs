//! Transport plans, Kantorovich potentials and the two solvers.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linalg::{dot, sub};
use crate::transport::measure::DiscreteMeasure;
use crate::transport::network_simplex::solve_transportation;

/// Largest number of sites per side handled by the exact solver.
pub const EXACT_LIMIT: usize = 5_000;
/// Largest number of sites per side handled by the entropic solver.
pub const ENTROPIC_LIMIT: usize = 40_000;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Solver selection for [`solve_ot`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OtMode {
    Exact,
    /// Entropic regularization with the given `ε` (absolute, in squared length units).
    Entropic(f64),
    /// Exact up to [`EXACT_LIMIT`] sites, entropic with `ε = 1e-3 diam²` beyond.
    Auto,
}

/// Dual variables: `φ_i + ψ_j ≤ |x_i - y_j|²` with equality on the support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Convergence report of the entropic solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropicReport {
    pub epsilon: f64,
    pub iterations: usize,
    pub marginal_residual: f64,
    /// Regularized primal minus dual objective.
    pub duality_gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportPlan {
    pub source: DiscreteMeasure,
    pub target: DiscreteMeasure,
    /// Sparse coupling `(i, j, mass)`.
    pub coupling: Vec<(usize, usize, f64)>,
    /// `Σ mass · |x_i - y_j|²`.
    pub cost: f64,
    pub potentials: Option<PotentialField>,
    pub entropic: Option<EntropicReport>,
}

impl TransportPlan {
    /// Couple site `i` of `source` with site `i` of `target`.
    pub fn matching(source: DiscreteMeasure, target: DiscreteMeasure) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::DimensionMismatch { expected: source.len(), got: target.len() });
        }
        if source.weights.iter().zip(&target.weights).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::InvalidParameter("matched sites need equal weights".into()));
        }
        let coupling: Vec<_> = source.weights.iter().enumerate().map(|(i, &w)| (i, i, w)).collect();
        let cost = coupling.iter().map(|&(i, j, w)| w * sq_dist(&source.points[i], &target.points[j])).sum();
        Ok(Self { source, target, coupling, cost, potentials: None, entropic: None })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.source.len()];
        for &(i, _, w) in &self.coupling {
            r[i] += w;
        }
        r
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.target.len()];
        for &(_, j, w) in &self.coupling {
            c[j] += w;
        }
        c
    }

    /// Largest absolute deviation of either marginal.
    pub fn marginal_residual(&self) -> f64 {
        let rows = self.row_sums().iter().zip(&self.source.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let cols = self.col_sums().iter().zip(&self.target.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.max(cols)
    }

    pub fn support_size(&self) -> usize {
        self.coupling.len()
    }

    /// Largest `|φ_i + ψ_j - c_ij|` over the support, when potentials exist.
    pub fn slackness_violation(&self) -> Option<f64> {
        let pf = self.potentials.as_ref()?;
        Some(
            self.coupling
                .iter()
                .map(|&(i, j, _)| (pf.phi[i] + pf.psi[j] - sq_dist(&self.source.points[i], &self.target.points[j])).abs())
                .fold(0.0, f64::max),
        )
    }

    /// CSV with header `i,j,mass,cost_ij`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,mass,cost_ij\n");
        for &(i, j, w) in &self.coupling {
            let c = sq_dist(&self.source.points[i], &self.target.points[j]);
            writeln!(s, "{i},{j},{w:e},{c:e}").expect("write to string");
        }
        s
    }
}

/// Integer supplies proportional to `weights`, summing to `total`.
fn integer_supplies(weights: &[f64], total: i64) -> Vec<i64> {
    let mut s: Vec<i64> = weights.iter().map(|w| (w * total as f64).round() as i64).collect();
    let diff = total - s.iter().sum::<i64>();
    let k = (0..s.len()).max_by(|&a, &b| weights[a].total_cmp(&weights[b])).expect("nonempty");
    s[k] += diff;
    s
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn all_equal(w: &[f64]) -> bool {
    w.iter().all(|x| (x - w[0]).abs() <= 1e-15)
}

fn solve_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportPlan> {
    let (n, m) = (mu.len(), nu.len());
    let (supply, demand, total) = if all_equal(&mu.weights) && all_equal(&nu.weights) {
        let l = n as u64 / gcd(n as u64, m as u64) * m as u64;
        (vec![(l / n as u64) as i64; n], vec![(l / m as u64) as i64; m], l as i64)
    } else {
        let total = 1i64 << 40;
        (integer_supplies(&mu.weights, total), integer_supplies(&nu.weights, total), total)
    };
    let sol = solve_transportation(&supply, &demand, |i, j| sq_dist(&mu.points[i], &nu.points[j]))?;
    let coupling: Vec<_> = sol.flows.iter().map(|&(i, j, f)| (i, j, f as f64 / total as f64)).collect();
    let cost = coupling.iter().map(|&(i, j, w)| w * sq_dist(&mu.points[i], &nu.points[j])).sum();
    let phi = sol.potentials[..n].iter().map(|p| -p).collect();
    let psi = sol.potentials[n..].to_vec();
    Ok(TransportPlan {
        source: mu.clone(),
        target: nu.clone(),
        coupling,
        cost,
        potentials: Some(PotentialField { phi, psi }),
        entropic: None,
    })
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn with geometric `ε`-annealing.
fn solve_entropic(mu: &DiscreteMeasure, nu: &DiscreteMeasure, epsilon: f64) -> Result<TransportPlan> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("entropic ε must be positive".into()));
    }
    let (n, m) = (mu.len(), nu.len());
    let cost = |i: usize, j: usize| sq_dist(&mu.points[i], &nu.points[j]);
    let log_mu: Vec<f64> = mu.weights.iter().map(|w| w.ln()).collect();
    let log_nu: Vec<f64> = nu.weights.iter().map(|w| w.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let scale = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| cost(i, j)).fold(0.0, f64::max).max(epsilon);
    let mut eps = scale;
    let tol = 1e-9;
    let max_iter = 20_000;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    loop {
        let last_stage = eps <= epsilon;
        let stage_iters = if last_stage { max_iter } else { 50 };
        for _ in 0..stage_iters {
            for i in 0..n {
                f[i] = -eps * log_sum_exp((0..m).map(|j| (g[j] - cost(i, j)) / eps + log_nu[j]));
            }
            for j in 0..m {
                g[j] = -eps * log_sum_exp((0..n).map(|i| (f[i] - cost(i, j)) / eps + log_mu[i]));
            }
            iterations += 1;
            // columns are exact after the g-update; check rows
            residual = (0..n)
                .map(|i| {
                    let row: f64 = (0..m).map(|j| ((f[i] + g[j] - cost(i, j)) / eps + log_nu[j]).exp()).sum();
                    (mu.weights[i] * row - mu.weights[i]).abs()
                })
                .sum();
            if residual < tol {
                break;
            }
        }
        if last_stage {
            break;
        }
        eps = (eps * 0.5).max(epsilon);
    }
    if !(residual < 1e-6) {
        return Err(Error::NonConvergence { message: "Sinkhorn iterations exhausted".into(), residual });
    }
    let mut coupling = Vec::new();
    let (mut transport, mut entropy, mut mass) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..m {
            let c = cost(i, j);
            let log_ratio = (f[i] + g[j] - c) / eps;
            let w = mu.weights[i] * nu.weights[j] * log_ratio.exp();
            if w > 0.0 {
                transport += w * c;
                entropy += w * log_ratio;
                mass += w;
                if w > 1e-15 {
                    coupling.push((i, j, w));
                }
            }
        }
    }
    let primal = transport + epsilon * entropy;
    let dual = dot(&f, &mu.weights) + dot(&g, &nu.weights) - epsilon * (mass - 1.0);
    let mut plan = TransportPlan {
        source: mu.clone(),
        target: nu.clone(),
        coupling,
        cost: transport,
        potentials: Some(PotentialField { phi: f, psi: g }),
        entropic: None,
    };
    let marginal_residual = plan.marginal_residual();
    plan.entropic = Some(EntropicReport { epsilon, iterations, marginal_residual, duality_gap: primal - dual });
    Ok(plan)
}

/// Optimal coupling for the quadratic cost `|x - y|²`.
pub fn solve_ot(mu: &DiscreteMeasure, nu: &DiscreteMeasure, mode: OtMode) -> Result<TransportPlan> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptySet);
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: nu.dim() });
    }
    let size = mu.len().max(nu.len());
    match mode {
        OtMode::Exact if size > EXACT_LIMIT => {
            Err(Error::BudgetExceeded(format!("{size} sites exceed the exact limit {EXACT_LIMIT}")))
        }
        OtMode::Exact => solve_exact(mu, nu),
        OtMode::Auto if size <= EXACT_LIMIT => solve_exact(mu, nu),
        _ if size > ENTROPIC_LIMIT => {
            Err(Error::BudgetExceeded(format!("{size} sites exceed the entropic limit {ENTROPIC_LIMIT}")))
        }
        OtMode::Entropic(eps) => solve_entropic(mu, nu, eps),
        OtMode::Auto => {
            let diam = mu.diameter().max(nu.diameter());
            solve_entropic(mu, nu, 1e-3 * diam * diam)
        }
    }
}

/// Count sampled support pairs `(x₁→y₁), (x₂→y₂)` with `<x₁-x₂, y₁-y₂> < -1e-9`.
pub fn cyclical_monotonicity_check(plan: &TransportPlan, samples: usize, seed: u64) -> usize {
    let k = plan.coupling.len();
    if k < 2 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..samples {
        let a = plan.coupling[rng.random_range(0..k)];
        let b = plan.coupling[rng.random_range(0..k)];
        let dx = sub(&plan.source.points[a.0], &plan.source.points[b.0]);
        let dy = sub(&plan.target.points[a.1], &plan.target.points[b.1]);
        if dot(&dx, &dy) < -1e-9 {
            violations += 1;
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polytope::Polytope;
    use crate::transport::measure::discretize_uniform;

    fn square(n: usize, seed: u64) -> DiscreteMeasure {
        discretize_uniform(&Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), n, seed).unwrap()
    }

    #[test]
    fn identical_measures_give_the_diagonal() {
        let mu = square(40, 1);
        let plan = solve_ot(&mu, &mu, OtMode::Exact).unwrap();
        assert!(plan.cost.abs() < 1e-15);
        assert!(plan.coupling.iter().all(|&(i, j, _)| i == j));
        assert!(plan.marginal_residual() < 1e-9);
    }

    #[test]
    fn translation_matches_exhaustive_search() {
        let v = [0.3, -0.7];
        for n in 2..=8 {
            let mu = square(n, n as u64);
            let nu = mu.map(|p| vec![p[0] + v[0], p[1] + v[1]]);
            let plan = solve_ot(&mu, &nu, OtMode::Exact).unwrap();
            assert!((plan.cost - dot(&v, &v)).abs() < 1e-12, "n={n}");
            assert!(plan.coupling.iter().all(|&(i, j, _)| i == j));
        }
    }

    #[test]
    fn one_dimensional_sorted_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 + 0.5).collect();
        let mu = DiscreteMeasure::uniform(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let nu = DiscreteMeasure::uniform(ys.iter().map(|&y| vec![y]).collect()).unwrap();
        let plan = solve_ot(&mu, &nu, OtMode::Exact).unwrap();
        let (mut sx, mut sy) = (xs.clone(), ys.clone());
        sx.sort_by(f64::total_cmp);
        sy.sort_by(f64::total_cmp);
        let sorted: f64 = sx.iter().zip(&sy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
        assert!((plan.cost - sorted).abs() < 1e-12);
        for &(i, j, _) in &plan.coupling {
            let ri = sx.iter().position(|&x| x == xs[i]).unwrap();
            let rj = sy.iter().position(|&y| y == ys[j]).unwrap();
            assert_eq!(ri, rj);
        }
    }

    #[test]
    fn exact_plan_invariants() {
        let mu = square(50, 2);
        let tri = Polytope::from_vertices(2, vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let nu = discretize_uniform(&tri, 35, 3).unwrap();
        let plan = solve_ot(&mu, &nu, OtMode::Exact).unwrap();
        assert!(plan.marginal_residual() < 1e-9);
        assert!(plan.support_size() <= 50 + 35 - 1);
        assert!(plan.slackness_violation().unwrap() < 1e-9);
        let pf = plan.potentials.as_ref().unwrap();
        for i in 0..50 {
            for j in 0..35 {
                assert!(pf.phi[i] + pf.psi[j] <= sq_dist(&mu.points[i], &nu.points[j]) + 1e-9);
            }
        }
        assert_eq!(cyclical_monotonicity_check(&plan, 5000, 11), 0);
        let csv = plan.to_csv();
        assert!(csv.starts_with("i,j,mass,cost_ij\n"));
        assert_eq!(csv.lines().count(), plan.support_size() + 1);
    }

    #[test]
    fn swapped_pair_is_detected() {
        let mu = DiscreteMeasure::uniform((0..10).map(|i| vec![i as f64]).collect()).unwrap();
        let mut plan = TransportPlan::matching(mu.clone(), mu.clone()).unwrap();
        assert_eq!(cyclical_monotonicity_check(&plan, 2000, 1), 0);
        plan.coupling[2].1 = 7;
        plan.coupling[7].1 = 2;
        assert!(cyclical_monotonicity_check(&plan, 2000, 1) >= 1);
    }

    #[test]
    fn entropic_plan_approaches_exact_cost() {
        let mu = square(30, 4);
        let nu = mu.map(|p| vec![2.0 * p[0], 0.5 * p[1]]);
        let exact = solve_ot(&mu, &nu, OtMode::Exact).unwrap();
        let ent = solve_ot(&mu, &nu, OtMode::Entropic(1e-3)).unwrap();
        let report = ent.entropic.as_ref().unwrap();
        assert!(report.marginal_residual < 1e-6, "{report:?}");
        assert!(report.duality_gap.abs() < 1e-6, "{report:?}");
        assert!((ent.cost - exact.cost).abs() < 0.05 * exact.cost.max(1e-3), "{} vs {}", ent.cost, exact.cost);
    }

    #[test]
    fn budget_is_enforced() {
        let big = DiscreteMeasure::uniform((0..EXACT_LIMIT + 1).map(|i| vec![i as f64]).collect()).unwrap();
        let small = DiscreteMeasure::uniform(vec![vec![0.0]]).unwrap();
        assert!(matches!(solve_ot(&big, &small, OtMode::Exact), Err(Error::BudgetExceeded(_))));
    }
}
