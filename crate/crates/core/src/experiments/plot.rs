//! Plot-ready CSV files and a manifest describing them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::run::{csv_error, ExperimentReport, RowStatus};
use crate::experiments::scenario::Family;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotEntry {
    pub file: String,
    pub x_axis: String,
    pub y_axis: String,
    /// The inequality the plot is meant to probe.
    pub tests: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotManifest {
    pub plots: Vec<PlotEntry>,
}

fn statement(family: Family) -> &'static str {
    if family.is_convex() {
        "convex stability: |A△B|/|A| ≤ c_n √(δ/t)"
    } else {
        "general stability: |A△B|/|A| ≤ c_n √((δ+γ)/t)"
    }
}

/// Write `<family>_scaling.csv` (x = δ+γ, y = |A△B|/|A|) and
/// `<family>_ratio.csv` (x = δ+γ, y = ratio) for every family with finished
/// rows, series labelled by `t`, plus `manifest.json`.
pub fn emit_plot_data(report: &ExperimentReport, dir: &Path) -> Result<PlotManifest> {
    let ok: Vec<_> = report.rows.iter().filter(|r| r.status == RowStatus::Ok).collect();
    if ok.is_empty() {
        return Err(Error::EmptySet);
    }
    fs::create_dir_all(dir)?;
    let mut families: Vec<Family> = ok.iter().map(|r| r.spec.family).collect();
    families.dedup();
    let mut plots = Vec::new();
    for family in families {
        let rows: Vec<_> = ok.iter().filter(|r| r.spec.family == family).collect();
        for (suffix, y_axis) in [("scaling", "sym_diff_rel"), ("ratio", "ratio")] {
            let file = format!("{}_{suffix}.csv", family.name());
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["x", "y", "series"]).map_err(csv_error)?;
            for r in &rows {
                let y = if suffix == "scaling" { r.sym_diff_rel } else { r.ratio.unwrap_or(f64::NAN) };
                w.write_record([format!("{:e}", r.deficit()), format!("{y:e}"), format!("t={}", r.spec.t)])
                    .map_err(csv_error)?;
            }
            fs::write(dir.join(&file), w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?)?;
            plots.push(PlotEntry {
                file,
                x_axis: "delta+gamma".into(),
                y_axis: y_axis.into(),
                tests: statement(family).into(),
            });
        }
    }
    let manifest = PlotManifest { plots };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::run::{run_stability_experiment, ExperimentConfig};

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"scenarios": [
                {"family": "sheared-polytope", "dim": 2, "t": 0.5, "perturbation": 0.1, "h": 0.05, "seed": 1},
                {"family": "sheared-polytope", "dim": 2, "t": 0.5, "perturbation": 0.2, "h": 0.05, "seed": 2}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn manifest_lists_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_stability_experiment(&config(), 4, None).unwrap();
        let m = emit_plot_data(&rep, dir.path()).unwrap();
        assert_eq!(m.plots.len(), 2);
        for p in &m.plots {
            assert!(dir.path().join(&p.file).exists());
        }
        let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert_eq!(serde_json::from_str::<PlotManifest>(&text).unwrap(), m);
    }

    #[test]
    fn empty_report_is_an_error() {
        let rep = ExperimentReport { seed: 0, rows: Vec::new(), fits: Vec::new() };
        assert!(emit_plot_data(&rep, Path::new("/nonexistent")).is_err());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for d in [&d1, &d2] {
            let rep = run_stability_experiment(&config(), 9, Some(d.path())).unwrap();
            emit_plot_data(&rep, &d.path().join("plots")).unwrap();
        }
        for f in ["report.csv", "report.json", "plots/sheared-polytope_scaling.csv", "plots/manifest.json"] {
            assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap(), "{f}");
        }
    }
}
