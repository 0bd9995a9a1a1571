use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wbfm_cli::{cmd_estimate, cmd_run, cmd_synth, montecarlo, CliError, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "wbfm", version, about = "Frequency-modulation and spectrum estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// key = value experiment file; defaults give the reference experiment
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Realization seed (overrides `seed`)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo worker threads (overrides `workers`)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic observation, its ground truth and spectrum
    Synth,
    /// Estimate modulation and spectrum from the `input` signal file
    Estimate,
    /// Synthesize then estimate, scoring against the truth
    Run,
    /// Repeat `run` over `realizations` seeds and aggregate the criterion
    Montecarlo,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    let out = match cli.command {
        Command::Synth => cmd_synth(&cfg)?,
        Command::Estimate => cmd_estimate(&cfg)?,
        Command::Run => cmd_run(&cfg)?.1,
        Command::Montecarlo => montecarlo(&cfg)?.1,
    };
    out.write_to(&cfg.output)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wbfm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
