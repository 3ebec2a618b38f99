//! Reproducible experiment runner.

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Experiment, ExperimentConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "walklab", version, about = "Seeded experiments on random walks and homogeneous spaces")]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON object of experiment parameters; may also carry `seed` and `out`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides a parameter, `key=value` with a JSON value.
    #[arg(long = "param", short = 'p')]
    params: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with an error when an invariant check fails.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = ExperimentConfig::load(cli.experiment, cli.config.as_deref(), &cli.params, cli.seed, cli.out.clone())?;
    let outcome = experiments::run(&cfg)?;
    let name = cfg.experiment.name();
    match &cfg.output_path {
        Some(p) => output::write_csv(std::fs::File::create(p)?, name, &outcome.resolved, cfg.seed, &outcome.inputs, &outcome.table)?,
        None => output::write_csv(std::io::stdout().lock(), name, &outcome.resolved, cfg.seed, &outcome.inputs, &outcome.table)?,
    }
    let v = outcome.table.violations;
    if v.is_empty() {
        return Ok(());
    }
    if cli.strict {
        return Err(CliError::InvariantViolation(v));
    }
    for msg in &v {
        log::warn!("{msg}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("walklab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
