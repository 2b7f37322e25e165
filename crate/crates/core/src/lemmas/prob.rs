//! Random scalings and the Monte-Carlo form of the probabilistic bound
//! `E_{Q,o'} max{⟨Qx - T_Q(Qx), (Qx - Qo')/|Qx - Qo'|⟩, 0} ≳ d(x, C_B)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::affine::AffineMap;
use crate::geometry::linalg::{dot, norm, random_in_ball, random_unit, sub, Point};
use crate::geometry::polytope::{ball_sandwich_check, dist_to_convex, Polytope};
use crate::lemmas::LemmaReport;
use crate::seeds::batch_rng;
use crate::transport::{discretize_uniform, solve_ot, OtMode, TransportMap};

/// Constants of the probabilistic bound, each a closed-form function of `ℓ` and `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbLemParams {
    pub ell: f64,
    pub n: usize,
    pub psi: f64,
    pub phi: f64,
    pub xi: f64,
    pub theta: f64,
    pub zeta: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl ProbLemParams {
    pub fn new(ell: f64, n: usize) -> Result<Self> {
        if !(ell > 1.0) || n == 0 {
            return Err(Error::InvalidParameter(format!("need ℓ > 1 and n ≥ 1 (got ℓ = {ell}, n = {n})")));
        }
        let l2 = ell * ell;
        let psi = 0.1;
        let phi = 1.0 / (4.0 * ell);
        let xi = (phi / (12.0 * ell)).min(psi / (2.0 * ell));
        let theta = 2.0 * l2 / (xi * xi);
        let zeta = psi / (theta * theta * l2) / 24.0;
        let nf = n as f64;
        let a1 = xi * xi / (theta * theta * l2) / (4.0 * (nf - 1.0));
        let a2 = psi * psi * nf / (theta.powi(6) * l2.powi(3)) / (48.0 * 48.0);
        let alpha = a1.min(a2).min(0.5);
        let eta = (psi / (theta * ell) / 3.0).min(phi / 2.0);
        Ok(Self { ell, n, psi, phi, xi, theta, zeta, alpha, eta })
    }
}

/// `Q = Σ θ_i e_i e_iᵀ` for an orthonormal frame `(e_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomScaling {
    /// Rows are the frame vectors.
    pub basis: Vec<Point>,
    pub diag: Vec<f64>,
    pub seed: u64,
}

impl RandomScaling {
    fn with_diag(&self, d: impl Fn(f64) -> f64) -> AffineMap {
        let n = self.basis.len();
        let mut m = vec![vec![0.0; n]; n];
        for (e, &th) in self.basis.iter().zip(&self.diag) {
            for r in 0..n {
                for c in 0..n {
                    m[r][c] += d(th) * e[r] * e[c];
                }
            }
        }
        AffineMap::linear(m)
    }

    pub fn to_affine(&self) -> AffineMap {
        self.with_diag(|t| t)
    }

    pub fn inverse(&self) -> AffineMap {
        self.with_diag(|t| 1.0 / t)
    }

    pub fn determinant(&self) -> f64 {
        self.diag.iter().product()
    }

    /// `max |E Eᵀ - I|` entrywise.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.basis.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&self.basis[i], &self.basis[j]) - target).abs());
            }
        }
        worst
    }
}

/// Uniformly random orthonormal frame and independent `θ_i ~ U[1/θ, θ]`.
pub fn sample_random_scaling(n: usize, theta: f64, seed: u64) -> Result<RandomScaling> {
    if !(theta >= 1.0) {
        return Err(Error::InvalidParameter(format!("θ = {theta} must be at least 1")));
    }
    let mut rng = batch_rng(seed, 0);
    Ok(random_scaling_from(n, theta, seed, &mut rng))
}

fn random_scaling_from<R: Rng + ?Sized>(n: usize, theta: f64, seed: u64, rng: &mut R) -> RandomScaling {
    // Gram-Schmidt on Gaussian vectors gives the Haar measure on frames
    let mut basis: Vec<Point> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v = random_unit(n, rng);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let l = norm(&v);
        if l > 1e-6 {
            basis.push(v.iter().map(|x| x / l).collect());
        }
    }
    let diag = (0..n).map(|_| if theta == 1.0 { 1.0 } else { rng.random_range(1.0 / theta..=theta) }).collect();
    RandomScaling { basis, diag, seed }
}

/// Kolmogorov-Smirnov statistic of `samples` against `U[a, b]`.
pub fn ks_uniform(samples: &[f64], a: f64, b: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = ((x - a) / (b - a)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// How `T_Q` is produced for each sampled `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MapProvider {
    /// `T_Q(z) = z / max(1, gauge_{Q(C_B)}(z))`.
    Radial,
    /// `T_Q = Id`; valid only when `C_A ⊂ C_B`.
    Identity,
    /// Exact discrete transport between `sites`-point discretizations,
    /// evaluated at the nearest source site.
    DiscreteOt { sites: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// `d(x, C_B)`.
    pub distance: f64,
    pub theta: f64,
    pub trials: usize,
}

impl ProbEstimate {
    /// Trivial when `x ∈ C_B`; otherwise the estimate must be positive.
    pub fn passes(&self) -> bool {
        self.distance == 0.0 || self.estimate > 0.0
    }
}

const TRIALS_PER_CHUNK: usize = 1_000;

/// Monte-Carlo estimate over `trials` draws of `(Q, o')`, `Q ~ 𝒬_θ` with
/// `θ` from [`ProbLemParams`] and `o'` uniform in `B(o, 1/ℓ)`.
#[allow(clippy::too_many_arguments)]
pub fn mc_probabilistic_bound(
    c_a: &Polytope,
    c_b: &Polytope,
    ell: f64,
    x: &[f64],
    trials: usize,
    seed: u64,
    provider: MapProvider,
) -> Result<ProbEstimate> {
    let dim = c_a.dim();
    let params = ProbLemParams::new(ell, dim)?;
    let origin = vec![0.0; dim];
    for c in [c_a, c_b] {
        if !ball_sandwich_check(&c.scale_about(&origin, 0.5), ell) {
            return Err(Error::Precondition("B(o, 1/ℓ) ⊂ ½C ⊂ B(o, ℓ) fails".into()));
        }
    }
    if (c_a.gauge(x)? - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition("x must lie on ∂C_A".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let distance = dist_to_convex(x, c_b);
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let sums: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = batch_rng(seed, c as u64);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in c * TRIALS_PER_CHUNK..((c + 1) * TRIALS_PER_CHUNK).min(trials) {
                let q = random_scaling_from(dim, params.theta, seed, &mut rng);
                let o = random_in_ball(&origin, 1.0 / ell, &mut rng);
                let v = integrand(c_a, c_b, &q, x, &o, provider, rng.random())?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect();
    let (mut s, mut s2) = (0.0, 0.0);
    for r in sums {
        let (a, b) = r?;
        s += a;
        s2 += b;
    }
    let k = trials as f64;
    let mean = s / k;
    let var = if trials > 1 { ((s2 - k * mean * mean) / (k - 1.0)).max(0.0) } else { 0.0 };
    Ok(ProbEstimate { estimate: mean, std_error: (var / k).sqrt(), distance, theta: params.theta, trials })
}

#[allow(clippy::too_many_arguments)]
fn integrand(
    c_a: &Polytope,
    c_b: &Polytope,
    q: &RandomScaling,
    x: &[f64],
    o: &[f64],
    provider: MapProvider,
    seed: u64,
) -> Result<f64> {
    // T_Q is handled through its pullback Q⁻¹ T_Q Q, which keeps the
    // containment test well conditioned for large θ
    let qm = q.to_affine();
    let pulled: Point = match provider {
        MapProvider::Radial => {
            let g = c_b.gauge(x)?;
            x.iter().map(|v| v / g.max(1.0)).collect()
        }
        MapProvider::Identity => x.to_vec(),
        MapProvider::DiscreteOt { sites } => {
            // uniform measures push forward to uniform measures under linear maps
            let mu0 = discretize_uniform(c_a, sites, seed)?;
            let nu0 = discretize_uniform(c_b, sites, seed)?;
            let plan = solve_ot(&mu0.map(|p| qm.apply(p)), &nu0.map(|p| qm.apply(p)), OtMode::Auto)?;
            let map = TransportMap::from_plan(plan);
            let i = map.nearest_site(&qm.apply(x)).0;
            let row: Vec<(usize, f64)> = map.plan.coupling.iter().filter(|e| e.0 == i).map(|e| (e.1, e.2)).collect();
            let mass: f64 = row.iter().map(|r| r.1).sum();
            let mut img = vec![0.0; x.len()];
            for (j, w) in row {
                img.iter_mut().zip(&nu0.points[j]).for_each(|(a, b)| *a += w / mass * b);
            }
            img
        }
    };
    if c_b.gauge(&pulled)? > 1.0 + 1e-9 {
        return Err(Error::Precondition("map provider leaves Q(C_B)".into()));
    }
    let u = qm.apply_linear(&sub(x, o));
    let disp = qm.apply_linear(&sub(x, &pulled));
    Ok((dot(&disp, &u) / norm(&u)).max(0.0))
}

/// Run [`mc_probabilistic_bound`] at `points` random boundary points of a
/// regular 12-gon `C_A` against `C_B = 0.9 C_A`, scaled so that both satisfy
/// the sandwich for `ℓ`. A point violates when its estimate is not positive
/// although `d(x, C_B) > 0`; the reported slack is `min estimate / d`.
pub fn scan_prob(ell: f64, trials: usize, points: usize, seed: u64, provider: MapProvider) -> Result<LemmaReport> {
    let m = 12;
    let cos = (std::f64::consts::PI / m as f64).cos();
    let radius = (2.3 / (ell * cos)).max(1.0);
    let c_a = Polytope::regular_polygon(m, radius)?;
    let c_b = c_a.scale_about(&[0.0, 0.0], 0.9);
    let mut rng = batch_rng(seed, u64::MAX);
    let mut estimates = Vec::with_capacity(points);
    for k in 0..points {
        let p = c_a.sample_uniform(1, &mut rng).remove(0);
        let x: Point = p.iter().map(|v| v / c_a.gauge(&p).unwrap_or(1.0)).collect();
        estimates.push(mc_probabilistic_bound(&c_a, &c_b, ell, &x, trials, crate::seeds::derive_seed(seed, k as u64), provider)?);
    }
    let violations = estimates.iter().filter(|e| !e.passes() || e.estimate < 0.0).count();
    let worst = estimates
        .iter()
        .filter(|e| e.distance > 0.0)
        .map(|e| e.estimate / e.distance)
        .fold(f64::INFINITY, f64::min);
    Ok(LemmaReport {
        lemma: "prob".into(),
        params: serde_json::json!({
            "ell": ell, "trials": trials, "points": points, "seed": seed,
            "provider": provider, "polygon_radius": radius,
        }),
        samples: points,
        violations,
        worst_slack: worst,
    })
}

/// `min_k estimate_k / d_k` over points with `d_k > 0`, with a 95% interval
/// from a parametric bootstrap that redraws each estimate from
/// `N(estimate, std_error²)`.
pub fn min_ratio_ci(estimates: &[ProbEstimate], resamples: usize, seed: u64) -> Option<(f64, f64, f64)> {
    let pts: Vec<&ProbEstimate> = estimates.iter().filter(|e| e.distance > 0.0).collect();
    if pts.is_empty() {
        return None;
    }
    let min_of = |vals: &[f64]| vals.iter().zip(&pts).map(|(v, e)| v / e.distance).fold(f64::INFINITY, f64::min);
    let point = min_of(&pts.iter().map(|e| e.estimate).collect::<Vec<_>>());
    let mut rng = batch_rng(seed, 0);
    let mut boot: Vec<f64> = (0..resamples)
        .map(|_| {
            let draw: Vec<f64> = pts
                .iter()
                .map(|e| if e.std_error > 0.0 { Normal::new(e.estimate, e.std_error).unwrap().sample(&mut rng) } else { e.estimate })
                .collect();
            min_of(&draw)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let q = |p: f64| boot[((p * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];
    Some((point, q(0.025), q(0.975)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prob_scan_passes_and_repeats() {
        let rep = scan_prob(3.0, 2_000, 5, 4, MapProvider::Radial).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.worst_slack > 0.0, "{rep:?}");
        assert_eq!(rep, scan_prob(3.0, 2_000, 5, 4, MapProvider::Radial).unwrap());
        // small ℓ still works because the polygon is enlarged
        assert_eq!(scan_prob(1.5, 500, 2, 0, MapProvider::Radial).unwrap().violations, 0);
    }

    #[test]
    fn params_follow_their_definitions() {
        let p = ProbLemParams::new(3.0, 2).unwrap();
        assert_eq!(p.phi, 1.0 / 12.0);
        assert_eq!(p.xi, (1.0 / 12.0) / 36.0);
        assert_eq!(p.theta, 2.0 * 9.0 / (p.xi * p.xi));
        assert_eq!(p, ProbLemParams::new(3.0, 2).unwrap());
        assert!(p.alpha > 0.0 && p.alpha <= 0.5 && p.eta > 0.0 && p.zeta > 0.0);
        assert_eq!(ProbLemParams::new(2.0, 1).unwrap().alpha.min(1.0), ProbLemParams::new(2.0, 1).unwrap().alpha);
    }

    #[test]
    fn random_scaling_invariants() {
        let theta = 5.0;
        let mut entries = vec![Vec::new(); 3];
        for s in 0..2000 {
            let q = sample_random_scaling(3, theta, s).unwrap();
            assert!(q.orthonormality_residual() < 1e-9);
            let d = q.determinant();
            assert!(d >= theta.powi(-3) && d <= theta.powi(3));
            assert!((q.to_affine().determinant() - d).abs() < 1e-9 * d.max(1.0));
            for (k, v) in q.diag.iter().enumerate() {
                entries[k].push(*v);
            }
        }
        for e in &entries {
            assert!(ks_uniform(e, 1.0 / theta, theta) < ks_critical_1pct(e.len()));
        }
        let id = sample_random_scaling(2, 1.0, 3).unwrap().to_affine();
        assert!((id.apply(&[0.3, 0.7])[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn trivial_cases() {
        let c = Polytope::regular_polygon(12, 1.0).unwrap();
        let x = c.vertices()[0].clone();
        let same = mc_probabilistic_bound(&c, &c, 3.0, &x, 500, 1, MapProvider::Identity).unwrap();
        assert_eq!(same.estimate, 0.0);
        assert!(same.passes());
        let bigger = c.scale_about(&[0.0, 0.0], 1.1);
        let inside = mc_probabilistic_bound(&c, &bigger, 3.0, &x, 200, 1, MapProvider::Radial).unwrap();
        assert_eq!(inside.distance, 0.0);
        assert!(inside.passes());
        let smaller = c.scale_about(&[0.0, 0.0], 0.9);
        assert!(mc_probabilistic_bound(&c, &smaller, 3.0, &x, 50, 1, MapProvider::Identity).is_err());
    }

    #[test]
    fn shrunk_body_gives_positive_ratio() {
        let c_a = Polytope::regular_polygon(12, 1.0).unwrap();
        let c_b = c_a.scale_about(&[0.0, 0.0], 0.9);
        let mut rng = batch_rng(4, 0);
        let pts = crate::lemmas::ray::sample_boundary(&c_a, 6, &mut rng);
        let ests: Vec<ProbEstimate> = pts
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let p: Point = p.iter().map(|v| v / c_a.gauge(p).unwrap()).collect();
                mc_probabilistic_bound(&c_a, &c_b, 3.0, &p, 4000, k as u64, MapProvider::Radial).unwrap()
            })
            .collect();
        assert!(ests.iter().all(|e| e.estimate >= 0.0 && e.distance > 0.0));
        let (min, lo, _) = min_ratio_ci(&ests, 200, 1).unwrap();
        assert!(min > 0.0 && lo > 0.0);
    }

    #[test]
    fn discrete_provider_runs() {
        let c_a = Polytope::regular_polygon(12, 1.0).unwrap();
        let c_b = c_a.scale_about(&[0.0, 0.0], 0.9);
        let x = c_a.vertices()[3].clone();
        let e = mc_probabilistic_bound(&c_a, &c_b, 3.0, &x, 4, 2, MapProvider::DiscreteOt { sites: 60 }).unwrap();
        assert!(e.estimate >= 0.0);
    }
}
