//! `rislink`: run outage sweeps and distribution reports from a JSON
//! configuration, a named preset, or both.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use rislink_cli::config::{self, ExperimentConfig, FlagOverrides, ReportKind};
use rislink_cli::experiments::{run_distribution_report, run_outage_sweep, write_atomic};
use rislink_cli::plot::emit_plot_script;
use rislink_core::Result;

/// Statistical model and simulator of the receive SNR in a RIS-assisted
/// MIMO link: saddle-point analysis validated against Monte Carlo.
#[derive(Debug, Parser)]
#[command(name = "rislink", version, about)]
struct Cli {
    /// JSON configuration file (fields override the defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset: optimum-phase, random-phase, size-sweep, distribution.
    #[arg(long)]
    experiment: Option<String>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep axis: `var=start:step:stop` or `var=v1,v2,...`
    /// (var ∈ rho_bar_db, n_ris, bits).
    #[arg(long)]
    sweep: Option<String>,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let flags = FlagOverrides {
        out_dir: cli.out.map(|p| p.display().to_string()),
        trials: cli.trials,
        seed: cli.seed,
        sweep: cli.sweep,
    };
    let config = config::resolve_config(cli.experiment.as_deref(), cli.config.as_deref(), &flags)?;
    run_configured(&config)
}

/// Executes a resolved configuration and returns the written artifact paths.
fn run_configured(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let out_dir = Path::new(&config.out_dir);
    let csv_path = out_dir.join(format!("{}.csv", config.scenario));
    let mut written = Vec::new();
    match config.report {
        ReportKind::Outage => {
            let artifact = run_outage_sweep(config)?;
            for (row, message) in &artifact.row_errors {
                eprintln!("warning: row {row}: {message}");
            }
            write_atomic(&csv_path, &artifact.csv)?;
            written.push(csv_path.clone());
            let script_path = out_dir.join(format!("{}.py", config.scenario));
            emit_plot_script(
                &[csv_path.as_path()],
                &format!("outage probability — {}", config.scenario),
                &script_path,
            )?;
            written.push(script_path);
            println!(
                "{}: {} sweep points, config {}",
                config.scenario,
                artifact.rows.len(),
                artifact.config_hash
            );
        }
        ReportKind::Distribution => {
            let artifact = run_distribution_report(config)?;
            for (row, message) in &artifact.row_errors {
                eprintln!("warning: row {row}: {message}");
            }
            write_atomic(&csv_path, &artifact.csv)?;
            written.push(csv_path.clone());
            println!(
                "{}: {} grid points, config {}",
                config.scenario,
                artifact.rows.len(),
                artifact.config_hash
            );
        }
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for path in paths {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}
