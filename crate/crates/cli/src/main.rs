use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cave_cli::{cmd_oracle, cmd_run, cmd_sweep, RunOverrides, EXIT_CONFIG};
use cave_sim::SchedulerKind;

/// Seeded offloading simulator for a crowdsourced vehicular fleet.
#[derive(Parser)]
#[command(name = "cave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write tasks.csv + summary.json.
    Run {
        /// Scenario JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scheduler: cave | baseline | fpso_mr.
        #[arg(long)]
        scheduler: Option<String>,
        /// Override the simulated duration, seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run a parameter sweep over all three schedulers, writing sweep.csv.
    Sweep {
        /// Sweep spec JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Self-check against the independent oracles: allocation | assignment.
    Oracle { suite: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, seed, scheduler, duration } => {
            let scheduler = match scheduler.as_deref().map(str::parse::<SchedulerKind>) {
                Some(Ok(kind)) => Some(kind),
                Some(Err(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG as u8);
                }
                None => None,
            };
            let overrides = RunOverrides { seed, scheduler, duration };
            cmd_run(config.as_deref(), &out, &overrides)
        }
        Command::Sweep { spec, out } => cmd_sweep(&spec, &out),
        Command::Oracle { suite } => cmd_oracle(&suite),
    };
    ExitCode::from(code as u8)
}
