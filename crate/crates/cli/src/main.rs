use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mutrate_cli::config::{self, flag, Preset, Sources};
use mutrate_cli::runner::{read_runs, RUNS_CSV};
use mutrate_cli::{run_experiment, summarize, ConfigError, RunError};

#[derive(Parser)]
#[command(name = "mutrate", version, about = "Run mutation-rate control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch and write runs.csv and generations.csv.
    Run(BatchArgs),
    /// Run fixed-rate hosts with the reward-landscape probe and write probe.csv.
    Probe(BatchArgs),
    /// Summarise an existing runs.csv.
    Stats {
        /// Output directory of a previous run, or a runs.csv file.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Seed for the bootstrap.
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
    },
    /// Check a config and print it with every default filled in.
    Validate(SpecArgs),
}

#[derive(Args)]
struct SpecArgs {
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scale preset applied before the config file.
    #[arg(long)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

impl SpecArgs {
    fn sources(&self) -> Sources {
        Sources { preset: self.preset, config: self.config.clone(), ..Default::default() }.with_process_env()
    }
}

impl BatchArgs {
    fn sources(&self) -> Sources {
        let mut sources = self.spec.sources();
        if let Some(seed) = self.seed_base {
            sources.flags.push(flag("seed-base", "seed_base", seed));
        }
        if let Some(runs) = self.runs {
            sources.flags.push(flag("runs", "runs", runs));
        }
        if let Some(out) = &self.out {
            sources.flags.push(flag("out", "out", out.display()));
        }
        sources
    }
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
}

fn batch(args: &BatchArgs, probe: bool) -> Result<(), Failure> {
    let mut sources = args.sources();
    if probe {
        sources.flags.push(flag("probe", "controllers", "fixed"));
        sources.flags.push(flag("probe", "probe", "on"));
    }
    let spec = config::load(&sources)?;
    log::info!("{} runs per controller into {}", spec.runs, spec.out.display());
    let outcome = run_experiment(&spec, args.force)?;
    print!("{}", summarize(&outcome.results, spec.seed_base));
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => batch(&args, false),
        Command::Probe(args) => batch(&args, true),
        Command::Stats { out, seed_base } => {
            let path = if out.is_dir() { out.join(RUNS_CSV) } else { out };
            let runs = read_runs(&path)?;
            print!("{}", summarize(&runs, seed_base));
            Ok(())
        }
        Command::Validate(args) => {
            print!("{}", config::load(&args.sources())?.to_config_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Failure::Config(_) => 2,
                Failure::Run(_) => 1,
            })
        }
    }
}
