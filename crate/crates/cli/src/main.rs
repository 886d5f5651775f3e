//! `ens` — experiment driver for the ensemble reverse-diffusion sampler.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 runtime abort (a
//! diagnostic JSON object is printed to stderr).

use clap::{Parser, Subcommand};
use ens_cli::{runner, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ens", version, about = "Gradient-free ensemble sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Cap worker parallelism.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List registered targets, estimators, and integrators.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", runner::registry_listing());
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            threads,
            output,
        } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    eprintln!("error: cannot configure {n} worker threads: {e}");
                    return ExitCode::from(2);
                }
            }
            let opts = runner::RunOptions {
                seed_override: seed,
                output_override: output,
            };
            match runner::run_experiment(&config, &opts) {
                Ok(()) => ExitCode::SUCCESS,
                Err(CliError::Config(msg)) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(2)
                }
                Err(CliError::Runtime(msg)) => {
                    let diagnostic = serde_json::json!({
                        "error": "runtime abort",
                        "detail": msg,
                        "config": config.display().to_string(),
                    });
                    eprintln!("{diagnostic}");
                    ExitCode::from(3)
                }
            }
        }
    }
}
