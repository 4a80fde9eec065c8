use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use echoloop_cli::commands;

#[derive(Parser)]
#[command(name = "echoloop", version, about = "Feedback-loop simulations for bandit recommenders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial and write its trace
    Simulate {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        output_dir: PathBuf,
        /// Override the master seed from the config
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a parameter grid and write aggregated results
    Grid {
        grid: PathBuf,
        #[arg(short, long, default_value = "out")]
        output_dir: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize a results CSV against the interest ceilings
    Report {
        results: PathBuf,
        /// Exit nonzero if any cell exceeds its ceiling
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            config,
            output_dir,
            seed,
        } => commands::simulate(&config, &output_dir, seed),
        Command::Grid {
            grid,
            output_dir,
            parallelism,
            seed,
        } => commands::grid(&grid, &output_dir, parallelism, seed),
        Command::Report { results, strict } => {
            commands::report(&results, strict, &mut std::io::stdout().lock())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("echoloop: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
