//! The eigenvalue inequality: for `λ_1 ⋯ λ_n = 1` and `t ∈ (0, 1/2]`,
//! `α_n (λ_1 - 1)² ≤ t⁻¹(P - 1) + t^{-2n}(P - 1)²` with
//! `P = ∏ (t + (1-t) λ_i)` and `α_n = 2^{-(18+2n)}`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lemmas::LemmaReport;
use crate::seeds::batch_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaBoundConstants {
    pub n: usize,
    pub alpha: f64,
}

impl LambdaBoundConstants {
    pub fn new(n: usize) -> Self {
        Self { n, alpha: 2f64.powi(-(18 + 2 * n as i32)) }
    }

    /// `c_n = α_n^{-1/2}`, sufficient for the statement form.
    pub fn c_n(&self) -> f64 {
        self.alpha.powf(-0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCheck {
    pub pass: bool,
    /// `min_i (rhs - lhs_i)`.
    pub slack: f64,
    /// The same, divided by `rhs + lhs_i` (zero when both vanish).
    pub relative_slack: f64,
    /// `max_i |λ_i - 1| ≤ c_n (√((P-1)/t) + (P-1)/t^n)`.
    pub statement_pass: bool,
    pub c_n: f64,
}

/// Evaluate the reduced form with every coordinate in the `λ_1` role.
///
/// The last entry is renormalized so that the product is exactly one; the
/// given product must already be one within `1e-9`.
pub fn check_lambdabound(t: f64, lambda: &[f64]) -> Result<LambdaCheck> {
    check_with_alpha(t, lambda, LambdaBoundConstants::new(lambda.len()).alpha)
}

pub(crate) fn check_with_alpha(t: f64, lambda: &[f64], alpha: f64) -> Result<LambdaCheck> {
    let n = lambda.len();
    if n == 0 {
        return Err(Error::EmptySet);
    }
    if !(t > 0.0 && t <= 0.5) {
        return Err(Error::InvalidParameter(format!("t = {t} outside (0, 1/2]")));
    }
    if let Some(l) = lambda.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidParameter(format!("nonpositive eigenvalue {l}")));
    }
    let product: f64 = lambda.iter().product();
    if (product - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("eigenvalue product {product} is not 1")));
    }
    let mut l = lambda.to_vec();
    l[n - 1] = 1.0 / lambda[..n - 1].iter().product::<f64>();
    Ok(evaluate(t, &l, alpha))
}

fn evaluate(t: f64, l: &[f64], alpha: f64) -> LambdaCheck {
    let n = l.len();
    let p: f64 = l.iter().map(|x| t + (1.0 - t) * x).product();
    let d = p - 1.0;
    let tn = t.powi(n as i32);
    let rhs = d / t + (d / tn).powi(2);
    // rounding in P - 1 for products that are one only up to f64 precision
    let tol = 8.0 * n as f64 * f64::EPSILON * p * (1.0 / t + 2.0 * d.abs() / (tn * tn));
    let (mut slack, mut rel) = (f64::INFINITY, f64::INFINITY);
    let mut pass = true;
    for &li in l {
        let lhs = alpha * (li - 1.0).powi(2);
        let s = rhs - lhs;
        pass &= s >= -tol;
        slack = slack.min(s);
        let denom = rhs.abs() + lhs;
        rel = rel.min(if denom > 0.0 { s / denom } else { 0.0 });
    }
    let c_n = alpha.powf(-0.5);
    let dev = l.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    let statement_rhs = c_n * (d.max(0.0) / t).sqrt() + c_n * d.max(0.0) / tn;
    LambdaCheck {
        pass,
        slack,
        relative_slack: rel,
        statement_pass: dev <= statement_rhs * (1.0 + 1e-12) + c_n * tol.sqrt(),
        c_n,
    }
}

const CHUNK: usize = 10_000;

/// Random `(n, t, λ)` with `n` cycling through `1..=n_max`, `t` uniform in
/// `(0, 1/2]` and `λ` log-uniform in `[1e-3, 1e3]` with the last entry
/// divided by the product. `alpha` overrides `α_n` (negative control).
pub fn scan_lambdabound(n_max: usize, samples: usize, seed: u64, alpha: Option<f64>) -> Result<LemmaReport> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let (violations, worst) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = batch_rng(seed, c as u64);
            let (mut v, mut w) = (0usize, f64::INFINITY);
            for k in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let n = 1 + k % n_max;
                let t = 0.5 * (1.0 - rng.random::<f64>());
                let mut l: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
                let p: f64 = l.iter().product();
                l[n - 1] /= p;
                let a = alpha.unwrap_or_else(|| LambdaBoundConstants::new(n).alpha);
                let r = evaluate(t, &l, a);
                if !r.pass {
                    v += 1;
                }
                w = w.min(r.relative_slack);
            }
            (v, w)
        })
        .reduce(|| (0, f64::INFINITY), |a, b| (a.0 + b.0, a.1.min(b.1)));
    Ok(LemmaReport {
        lemma: "lambdabound".into(),
        params: serde_json::json!({ "n_max": n_max, "seed": seed, "alpha_override": alpha }),
        samples,
        violations,
        worst_slack: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(LambdaBoundConstants::new(2).alpha, 2f64.powi(-22));
        assert_eq!(LambdaBoundConstants::new(2).c_n(), 2048.0);
    }

    #[test]
    fn equality_at_unit_eigenvalues() {
        let r = check_lambdabound(0.3, &[1.0, 1.0, 1.0]).unwrap();
        assert!(r.pass && r.slack == 0.0 && r.statement_pass);
    }

    #[test]
    fn worked_examples() {
        let r = check_lambdabound(0.5, &[2.0, 0.5]).unwrap();
        // rhs = 2·0.125 + 16·0.125², lhs (λ=2) = 2^-22
        assert!((r.slack - (0.5 - 2f64.powi(-22))).abs() < 1e-15, "{r:?}");
        assert!(r.pass);
        let r = check_lambdabound(0.05, &[10.0, 1.0, 0.1]).unwrap();
        assert!(r.pass && r.slack > 0.0 && r.statement_pass);
    }

    #[test]
    fn adversarial_corner() {
        for eps in [1e-9, 1e-6, 1e-3] {
            for l1 in [0.25 - eps, 0.25, 0.25 + eps] {
                assert!(check_lambdabound(0.5, &[l1, 1.0 / l1]).unwrap().pass);
                assert!(check_lambdabound(0.5, &[l1, 1.0, 1.0 / l1]).unwrap().pass);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(check_lambdabound(0.5, &[2.0, 0.0]).is_err());
        assert!(check_lambdabound(0.5, &[2.0, 2.0]).is_err());
        assert!(check_lambdabound(0.7, &[1.0]).is_err());
    }

    #[test]
    fn scan_and_negative_control() {
        let ok = scan_lambdabound(6, 50_000, 1, None).unwrap();
        assert_eq!(ok.violations, 0);
        let bad = scan_lambdabound(6, 50_000, 1, Some(1.0)).unwrap();
        assert!(bad.violations >= 1);
        assert_eq!(scan_lambdabound(4, 30_000, 9, None).unwrap(), scan_lambdabound(4, 30_000, 9, None).unwrap());
    }
}
