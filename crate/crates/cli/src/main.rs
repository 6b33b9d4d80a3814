//! Command-line frontend: parse a run configuration, execute the
//! experiment, and write its data files plus a content-hash manifest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod config;
mod runner;
mod table;

use runner::CliError;

/// Experiment runner for the dressed long-range hopping chain.
#[derive(Debug, Parser)]
#[command(name = "ssh-ion-lab", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for sweep points; 0 uses all cores. The
    /// SSH_ION_LAB_THREADS environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Overrides the configured output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the configured output format.
    #[arg(long, value_enum)]
    format: Option<config::OutputFormat>,
    /// Suppresses the run summary line.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&cli.config)?;
    let mut config = config::parse_config(&text)?;
    if let Some(dir) = &cli.output {
        config.output_dir = dir.clone();
    }
    if let Some(format) = cli.format {
        config.format = format;
    }
    let jobs = effective_jobs(cli.jobs)?;
    runner::run_experiment(&config, &text, jobs, cli.quiet)
}

/// Worker count: SSH_ION_LAB_THREADS when set, otherwise --jobs.
fn effective_jobs(flag: usize) -> Result<usize, CliError> {
    match std::env::var("SSH_ION_LAB_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => {
            Err(ssh_ion_core::Error::Domain(format!("SSH_ION_LAB_THREADS: {e}")).into())
        }
        Ok(raw) => raw.trim().parse::<usize>().map_err(|e| {
            ssh_ion_core::Error::Domain(format!("SSH_ION_LAB_THREADS = {raw:?}: {e}")).into()
        }),
    }
}
