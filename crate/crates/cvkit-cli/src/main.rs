//! Command-line experiment runner.
//!
//! Exit codes: 0 success, 2 configuration errors, 3 numerical failures.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cvkit::config::{preset, ExperimentConfig, Task};
use cvkit::experiment;

#[derive(Parser)]
#[command(
    name = "cvkit",
    about = "Collective-variable discovery for metastable stochastic dynamics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Path to the experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the run log on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a trajectory and export the dataset.
    Simulate(ConfigArgs),
    /// Run a training task (train_ae, train_tlae, train_eigen_transfer,
    /// train_eigen_generator).
    Train(ConfigArgs),
    /// Grid/Ulam reference spectra (task oracle_report).
    Oracle(ConfigArgs),
    /// Minimal energy path by the string method (task mep).
    Mep(ConfigArgs),
    /// Evaluate stored checkpoints against fresh data (task evaluate).
    Evaluate(ConfigArgs),
    /// Run a bundled reference experiment.
    Reproduce {
        /// One of: example1-ae, example1-eigen, example2-ae, example2-eigen.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

fn load_config(args: &ConfigArgs, expect: Option<&[Task]>) -> cvkit::Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config)?;
    let cfg = ExperimentConfig::from_json_str(&text)?;
    if let Some(tasks) = expect {
        if !tasks.contains(&cfg.task) {
            return Err(cvkit::Error::InvalidConfig(format!(
                "config task {:?} does not match this subcommand",
                cfg.task
            )));
        }
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> cvkit::Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_config(&args, None)?;
            let dir = experiment::simulate_only(&cfg, args.out.as_deref())?;
            if !args.quiet {
                println!("dataset written to {}", dir.display());
            }
        }
        Command::Train(args) => {
            let cfg = load_config(
                &args,
                Some(&[
                    Task::TrainAe,
                    Task::TrainTlae,
                    Task::TrainEigenTransfer,
                    Task::TrainEigenGenerator,
                ]),
            )?;
            experiment::run(&cfg, args.out.as_deref(), args.quiet)?;
        }
        Command::Oracle(args) => {
            let cfg = load_config(&args, Some(&[Task::OracleReport]))?;
            experiment::run(&cfg, args.out.as_deref(), args.quiet)?;
        }
        Command::Mep(args) => {
            let cfg = load_config(&args, Some(&[Task::Mep]))?;
            experiment::run(&cfg, args.out.as_deref(), args.quiet)?;
        }
        Command::Evaluate(args) => {
            let cfg = load_config(&args, Some(&[Task::Evaluate]))?;
            experiment::run(&cfg, args.out.as_deref(), args.quiet)?;
        }
        Command::Reproduce { name, out, quiet } => {
            let cfg = preset(&name)?;
            experiment::run(&cfg, out.as_deref(), quiet)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
