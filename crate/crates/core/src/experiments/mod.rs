//! Scenario generation, stability runs, exponent fits and plot data.

pub mod fit;
pub mod interval;
pub mod plot;
pub mod run;
pub mod scenario;

pub use fit::{fit_log_log, ScalingFit, BOOTSTRAP_RESAMPLES};
pub use interval::{interval_combination, interval_deficit, merge_intervals, union_length};
pub use plot::{emit_plot_data, PlotEntry, PlotManifest};
pub use run::{
    family_fits, polytope_deficit, polytope_sym_diff, run_stability_experiment, ExperimentConfig, ExperimentReport,
    ExperimentRow, FamilyFit, RowStatus,
};
pub use scenario::{generate_scenario, voxelize, ClosedForm, Family, Scenario, ScenarioMeta, ScenarioSpec};

/// Fit `y` against `x` over the usable rows of a report.
pub fn fit_scaling_exponent(
    report: &ExperimentReport,
    x: impl Fn(&ExperimentRow) -> f64,
    y: impl Fn(&ExperimentRow) -> f64,
    seed: u64,
) -> crate::Result<ScalingFit> {
    let pts: Vec<(f64, f64)> = report.rows.iter().filter(|r| r.fit_usable()).map(|r| (x(r), y(r))).collect();
    fit_log_log(&pts, seed)
}
