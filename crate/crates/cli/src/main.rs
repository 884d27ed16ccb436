use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tubecond_cli::{load_config, run_jobs, JobKind, RunConfig};

#[derive(Parser)]
#[command(name = "tubecond", version, about = "Optical conductivity of electrons on a periodic nanotube")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// `key=value` with a dotted key, e.g. `model.M_modes=8`. Repeatable.
    #[arg(long = "override", short = 'o', value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and dipole weights: spectrum.csv.
    Spectrum(Common),
    /// Conductivity on the frequency grid: sweep.csv.
    Sweep(Common),
    /// Zero-linewidth lines: lines.csv.
    Lines(Common),
    /// Frequency-domain versus time-domain conductivity: compare.csv.
    Oracle(Common),
    /// Cutoff and time-step refinement: convergence.csv, convergence_dt.csv.
    Converge(Common),
    /// Every job listed in the config.
    Run(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, job) = match cli.command {
        Command::Spectrum(c) => (c, Some(JobKind::Spectrum)),
        Command::Sweep(c) => (c, Some(JobKind::Sweep)),
        Command::Lines(c) => (c, Some(JobKind::Lines)),
        Command::Oracle(c) => (c, Some(JobKind::OracleCompare)),
        Command::Converge(c) => (c, Some(JobKind::ConvergenceStudy)),
        Command::Run(c) => (c, None),
    };
    let cfg: RunConfig = match load_config(&common.config, &common.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    log::info!("resolved config:\n{}", cfg.echo());
    let jobs = job.map(|j| vec![j]).unwrap_or_else(|| cfg.jobs.clone());
    match run_jobs(&cfg, &jobs) {
        Ok(m) => {
            for a in &m.artifacts {
                println!("{:<16} {}", a.role, cfg.output_dir.join(&a.path).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
