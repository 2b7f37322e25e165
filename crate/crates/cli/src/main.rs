//! Command-line entry point: stability experiments and lemma scans.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bmstab::experiments::{emit_plot_data, run_stability_experiment, ExperimentConfig, RowStatus};
use bmstab::lemmas::{scan_lambdabound, scan_prob, scan_ray, LemmaReport, MapProvider};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bmstab", version, about = "Brunn-Minkowski stability laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario-driven stability experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Randomized checks of individual inequalities; prints a JSON report.
    Lemma {
        #[command(subcommand)]
        which: LemmaCommand,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Run every scenario of a JSON config and write reports and plot data.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

#[derive(Subcommand)]
enum LemmaCommand {
    /// Eigenvalue inequality over random (n, t, λ).
    Lambdabound {
        /// Largest dimension; samples cycle through 1..=n.
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace the constant α_n (negative control).
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Pointwise ray claim on random sandwiched pairs.
    Ray {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 3.0)]
        ell: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random-scaling expectation bound by Monte Carlo.
    Prob {
        #[arg(long, default_value_t = 3.0)]
        ell: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        /// Boundary points to test.
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use discrete transport with this many sites instead of the radial map.
        #[arg(long)]
        ot_sites: Option<usize>,
    },
}

fn print_report(report: &LemmaReport) -> ExitCode {
    println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
    if report.violations == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run_lemma(which: LemmaCommand) -> bmstab::Result<ExitCode> {
    let report = match which {
        LemmaCommand::Lambdabound { n, samples, seed, alpha } => scan_lambdabound(n, samples, seed, alpha)?,
        LemmaCommand::Ray { instances, samples, ell, seed } => scan_ray(instances, samples, ell, seed)?,
        LemmaCommand::Prob { ell, trials, points, seed, ot_sites } => {
            let provider = ot_sites.map_or(MapProvider::Radial, |sites| MapProvider::DiscreteOt { sites });
            scan_prob(ell, trials, points, seed, provider)?
        }
    };
    Ok(print_report(&report))
}

fn run_experiment(config: PathBuf, out: PathBuf, seed: u64, threads: usize) -> bmstab::Result<ExitCode> {
    let config = ExperimentConfig::load(&config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| bmstab::Error::InvalidParameter(e.to_string()))?;
    let start = Instant::now();
    let report = pool.install(|| run_stability_experiment(&config, seed, Some(&out)))?;
    if report.rows.iter().any(|r| r.status == RowStatus::Ok) {
        emit_plot_data(&report, &out.join("plots"))?;
    }
    let failed = report.failed_rows();
    eprintln!(
        "{} rows ({} failed) in {:.2?}; reports in {}",
        report.rows.len(),
        failed,
        start.elapsed(),
        out.display()
    );
    for r in report.rows.iter().filter(|r| r.status == RowStatus::Failed) {
        eprintln!("  {} (dim {}, p = {}): {}", r.spec.family.name(), r.spec.dim, r.spec.perturbation, r.error.as_deref().unwrap_or(""));
    }
    for f in &report.fits {
        eprintln!(
            "  {}: slope {:.4} [{:.4}, {:.4}] over {} rows",
            f.family.name(),
            f.fit.slope,
            f.fit.ci_low,
            f.fit.ci_high,
            f.fit.rows
        );
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment { action: ExperimentAction::Run { config, out, seed, threads } } => {
            run_experiment(config, out, seed, threads)
        }
        Command::Lemma { which } => run_lemma(which),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
