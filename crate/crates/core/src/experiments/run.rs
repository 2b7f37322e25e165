//! Config-driven stability runs.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::fit::{fit_log_log, ScalingFit};
use crate::experiments::scenario::{generate_scenario, ClosedForm, Family, Scenario, ScenarioSpec};
use crate::geometry::deficit::{bm_deficit, convex_hull, hull_gap};
use crate::geometry::linalg::{centroid, sub, Point};
use crate::geometry::polytope::Polytope;
use crate::geometry::symdiff::sym_diff_min_translation;
use crate::lemmas::{mainprop_diagnostics, DiagnosticRow, MainPropOptions};
use crate::optim::nelder_mead;
use crate::seeds::derive_seed;

/// Rows whose `δ + γ` error bar exceeds this share of the value are left
/// out of exponent fits.
pub const FIT_ERROR_SHARE: f64 = 0.2;

/// Below this `δ + γ` the ratio is undefined and the row is vacuous.
pub const VACUOUS_LEVEL: f64 = 1e-12;

fn default_epsilon() -> f64 {
    0.5
}
fn default_ell() -> f64 {
    2.0
}
fn default_sites() -> usize {
    400
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<ScenarioSpec>,
    /// When nonempty, every scenario runs once per entry, overriding its `t`.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_ell")]
    pub ell: f64,
    /// Run the transport diagnostics on rows that pass the hypothesis gate.
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default = "default_sites")]
    pub diagnostic_sites: usize,
    /// Dimension four is slow; it must be requested explicitly.
    #[serde(default)]
    pub allow_dim4: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Expand the `t` grid and mix `seed` into every scenario seed.
    pub fn jobs(&self, seed: u64) -> Result<Vec<ScenarioSpec>> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidParameter("no scenarios configured".into()));
        }
        let dim = self.scenarios[0].dim;
        let mut out = Vec::new();
        for s in &self.scenarios {
            if s.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.dim });
            }
            if s.dim == 4 && !self.allow_dim4 {
                return Err(Error::BudgetExceeded("dimension 4 needs allow_dim4".into()));
            }
            let ts: Vec<f64> = if self.t_grid.is_empty() { vec![s.t] } else { self.t_grid.clone() };
            for t in ts {
                out.push(ScenarioSpec { t, seed: derive_seed(seed, s.seed), ..s.clone() });
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Vacuous,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub spec: ScenarioSpec,
    pub status: RowStatus,
    pub error: Option<String>,
    pub volume: f64,
    pub delta: f64,
    pub delta_error: f64,
    pub gamma: f64,
    pub gamma_error: f64,
    /// `min_x |A △ (B + x)| / |A|`.
    pub sym_diff_rel: f64,
    pub translation: Point,
    /// `sym_diff_rel / √((δ + γ)/t)`.
    pub ratio: Option<f64>,
    /// `δ + γ ≤ t^{2n-1}/4`.
    pub hypothesis_gate: bool,
    pub closed_form: Option<ClosedForm>,
    pub diagnostics: Option<Vec<DiagnosticRow>>,
    pub diagnostics_error: Option<String>,
}

impl ExperimentRow {
    fn failed(spec: ScenarioSpec, e: Error) -> Self {
        Self {
            spec,
            status: RowStatus::Failed,
            error: Some(e.to_string()),
            volume: f64::NAN,
            delta: f64::NAN,
            delta_error: f64::NAN,
            gamma: f64::NAN,
            gamma_error: f64::NAN,
            sym_diff_rel: f64::NAN,
            translation: Vec::new(),
            ratio: None,
            hypothesis_gate: false,
            closed_form: None,
            diagnostics: None,
            diagnostics_error: None,
        }
    }

    pub fn deficit(&self) -> f64 {
        self.delta.max(0.0) + self.gamma.max(0.0)
    }

    /// Used in fits: finished, non-vacuous, and with a tight error bar.
    pub fn fit_usable(&self) -> bool {
        self.status == RowStatus::Ok && self.delta_error + self.gamma_error <= FIT_ERROR_SHARE * self.deficit()
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.spec, &other.spec);
        a.family
            .cmp(&b.family)
            .then(a.dim.cmp(&b.dim))
            .then(a.t.total_cmp(&b.t))
            .then(a.perturbation.total_cmp(&b.perturbation))
            .then(a.h.total_cmp(&b.h))
            .then(a.seed.cmp(&b.seed))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub family: Family,
    pub x: String,
    pub y: String,
    pub fit: ScalingFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub rows: Vec<ExperimentRow>,
    pub fits: Vec<FamilyFit>,
}

impl ExperimentReport {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RowStatus::Failed).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "family", "dim", "t", "perturbation", "h", "seed", "status", "volume", "delta", "delta_error", "gamma",
            "gamma_error", "sym_diff_rel", "translation", "ratio", "hypothesis_gate", "error",
        ])
        .map_err(csv_error)?;
        let f = |v: f64| format!("{v:e}");
        for r in &self.rows {
            let s = &r.spec;
            let status = match r.status {
                RowStatus::Ok => "ok",
                RowStatus::Vacuous => "vacuous",
                RowStatus::Failed => "failed",
            };
            let translation = r.translation.iter().map(|v| f(*v)).collect::<Vec<_>>().join(" ");
            w.write_record([
                s.family.name().to_string(),
                s.dim.to_string(),
                f(s.t),
                f(s.perturbation),
                f(s.h),
                s.seed.to_string(),
                status.to_string(),
                f(r.volume),
                f(r.delta),
                f(r.delta_error),
                f(r.gamma),
                f(r.gamma_error),
                f(r.sym_diff_rel),
                translation,
                r.ratio.map(f).unwrap_or_default(),
                r.hypothesis_gate.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `|tA + (1-t)B| / |A| - 1` for polytopes, through the hull of vertex sums.
pub fn polytope_deficit(a: &Polytope, b: &Polytope, t: f64) -> Result<f64> {
    let sums: Vec<Point> = a
        .vertices()
        .iter()
        .flat_map(|u| b.vertices().iter().map(move |v| u.iter().zip(v).map(|(x, y)| t * x + (1.0 - t) * y).collect()))
        .collect();
    Ok(Polytope::from_vertices(a.dim(), sums)?.volume() / a.volume() - 1.0)
}

/// `min_x |A △ (B + x)|` for polytopes, by Nelder-Mead on the exact
/// intersection volume started from the centroid difference.
pub fn polytope_sym_diff(a: &Polytope, b: &Polytope) -> Result<(f64, Point)> {
    let (va, vb) = (a.volume(), b.volume());
    let f = |x: &[f64]| {
        let inter = a.intersection(&b.translate(x)).map(|p| p.volume()).unwrap_or(0.0);
        va + vb - 2.0 * inter
    };
    let x0 = sub(&centroid(a.vertices()), &centroid(b.vertices()));
    let m = nelder_mead(f, &x0, 0.01 * a.diameter(), 1e-15 * va, 200 * a.dim());
    let start = f(&x0);
    Ok(if m.value < start { (m.value.max(0.0), m.x) } else { (start.max(0.0), x0) })
}

fn measure(sc: &Scenario, config: &ExperimentConfig) -> Result<ExperimentRow> {
    let spec = sc.spec.clone();
    let t = spec.t;
    let volume = sc.a.volume();
    let (delta, delta_error, gamma, gamma_error, sym_diff_rel, translation) = match &sc.exact {
        Some((ca, cb)) => {
            let d = polytope_deficit(ca, cb, t)?;
            let (s, x) = polytope_sym_diff(ca, cb)?;
            (d, 1e-12, 0.0, 0.0, s / ca.volume(), x)
        }
        None => {
            let d = bm_deficit(&sc.a, &sc.b, t)?;
            let (ga, gb) = (hull_gap(&sc.a)?, hull_gap(&sc.b)?);
            let best = sym_diff_min_translation(&sc.a, &sc.b)?;
            (d.value, d.grid_error, ga.value + gb.value, ga.grid_error + gb.grid_error, best.value / volume, best.translation)
        }
    };
    let total = delta.max(0.0) + gamma.max(0.0);
    let vacuous = total <= VACUOUS_LEVEL;
    let ratio = (!vacuous).then(|| sym_diff_rel / (total / t).sqrt());
    let n = spec.dim as i32;
    let hypothesis_gate = total <= 0.25 * t.powi(2 * n - 1);
    let (mut diagnostics, mut diagnostics_error) = (None, None);
    if config.diagnostics && hypothesis_gate {
        let hulls = match &sc.exact {
            Some(pair) => Ok(pair.clone()),
            None => convex_hull(&sc.a).and_then(|ca| Ok((ca, convex_hull(&sc.b)?))),
        };
        let opts = MainPropOptions {
            sites: config.diagnostic_sites,
            seed: spec.seed,
            known_deficits: Some((delta, gamma)),
            ..Default::default()
        };
        match hulls.and_then(|(ca, cb)| mainprop_diagnostics(&sc.a, &sc.b, &ca, &cb, t, config.epsilon, config.ell, &opts)) {
            Ok(rep) => diagnostics = Some(rep.rows),
            Err(e) => diagnostics_error = Some(e.to_string()),
        }
    }
    Ok(ExperimentRow {
        status: if vacuous { RowStatus::Vacuous } else { RowStatus::Ok },
        error: None,
        volume,
        delta,
        delta_error,
        gamma,
        gamma_error,
        sym_diff_rel,
        translation,
        ratio,
        hypothesis_gate,
        closed_form: sc.meta.closed_form,
        diagnostics,
        diagnostics_error,
        spec,
    })
}

/// Fit `sym_diff_rel` against `δ + γ` separately for every family with
/// enough usable rows.
pub fn family_fits(rows: &[ExperimentRow], seed: u64) -> Vec<FamilyFit> {
    let mut families: Vec<Family> = rows.iter().map(|r| r.spec.family).collect();
    families.dedup();
    families
        .into_iter()
        .filter_map(|family| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.spec.family == family && r.fit_usable())
                .map(|r| (r.deficit(), r.sym_diff_rel))
                .collect();
            let fit = fit_log_log(&pts, derive_seed(seed, family as u64)).ok()?;
            Some(FamilyFit { family, x: "delta+gamma".into(), y: "sym_diff_rel".into(), fit })
        })
        .collect()
}

/// Run every scenario of `config` (in parallel), sort the rows by scenario
/// key, fit exponents, and write `report.csv` and `report.json` into `out`.
///
/// A failing scenario becomes a failed row; the run itself only errors on
/// an invalid config or an I/O failure.
pub fn run_stability_experiment(config: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<ExperimentReport> {
    let jobs = config.jobs(seed)?;
    let mut rows: Vec<ExperimentRow> = jobs
        .into_par_iter()
        .map(|spec| match generate_scenario(&spec).and_then(|sc| measure(&sc, config)) {
            Ok(row) => row,
            Err(e) => ExperimentRow::failed(spec, e),
        })
        .collect();
    rows.sort_by(|a, b| a.key_cmp(b));
    let fits = family_fits(&rows, seed);
    let report = ExperimentReport { seed, rows, fits };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), report.to_csv()?)?;
        fs::write(dir.join("report.json"), report.to_json()?)?;
    }
    Ok(report)
}
