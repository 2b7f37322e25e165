//! Log-log least squares with a seeded bootstrap interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const MIN_FIT_ROWS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% bootstrap percentile interval of the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub rows: usize,
}

fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Fit `log y = slope · log x + intercept` over points with positive
/// coordinates, with a percentile bootstrap over rows.
pub fn fit_log_log(points: &[(f64, f64)], seed: u64) -> Result<ScalingFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < MIN_FIT_ROWS {
        return Err(Error::InsufficientSamples(format!(
            "{} usable rows, at least {MIN_FIT_ROWS} required",
            logs.len()
        )));
    }
    let (slope, intercept) =
        least_squares(&logs).ok_or_else(|| Error::Degenerate("all x values coincide".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .filter_map(|_| {
            let sample: Vec<(f64, f64)> = (0..logs.len()).map(|_| logs[rng.random_range(0..logs.len())]).collect();
            least_squares(&sample).map(|f| f.0)
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    Ok(ScalingFit { slope, intercept, ci_low: q(0.025), ci_high: q(0.975), rows: logs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square_root_law() {
        let pts: Vec<(f64, f64)> = (0..8).map(|k| 10f64.powf(-4.0 + 2.0 * k as f64 / 7.0)).map(|x| (x, x.sqrt())).collect();
        let f = fit_log_log(&pts, 1).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12, "{f:?}");
        assert!(f.intercept.abs() < 1e-10);
        assert!((f.ci_low - 0.5).abs() < 1e-12 && (f.ci_high - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_response_has_zero_slope() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|k| (k as f64, 3.0)).collect();
        let f = fit_log_log(&pts, 2).unwrap();
        assert!(f.slope.abs() < 1e-12 && f.ci_low <= 0.0 + 1e-12 && f.ci_high >= -1e-12);
    }

    #[test]
    fn too_few_rows() {
        assert!(fit_log_log(&[(1.0, 1.0), (2.0, 2.0)], 0).is_err());
        let with_zeros = [(1.0, 1.0), (2.0, 2.0), (3.0, 0.0), (0.0, 1.0), (4.0, 4.0)];
        assert!(fit_log_log(&with_zeros, 0).is_err());
    }

    #[test]
    fn seeded_bootstrap_is_reproducible() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64, (k as f64).powf(0.7) * (1.0 + 0.05 * (k % 3) as f64))).collect();
        assert_eq!(fit_log_log(&pts, 5).unwrap(), fit_log_log(&pts, 5).unwrap());
    }
}
