use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coopreg_cli::commands::{self, RunOptions};
use coopreg_cli::error::{CliError, Failure};
use coopreg_cli::verify::{self, Fault};

#[derive(Parser)]
#[command(name = "coopreg", version, about = "Cooperative output regulation of multi-agent networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the solvability conditions of a scenario.
    Check {
        /// Scenario file, or `@name` for a built-in scenario.
        scenario: String,
    },
    /// Compute and certify all gains.
    Synth {
        scenario: String,
        /// Write the gain set as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the closed loop and write trace.csv and metrics.json.
    Run {
        scenario: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "tfinal")]
        t_final: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        record_every: Option<usize>,
    },
    /// Run the acceptance checks.
    Verify {
        /// Only run these criteria (1-10).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    K2Sign,
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    match cli.command {
        Command::Check { scenario } => commands::check(&scenario, out),
        Command::Synth { scenario, out: path } => {
            let gains = commands::synth(&scenario, path.as_deref(), out)?;
            if gains.all_certified() {
                Ok(true)
            } else {
                Err(CliError::new(Failure::Numerical, "some certificates failed"))
            }
        }
        Command::Run {
            scenario,
            out_dir,
            dt,
            t_final,
            seed,
            record_every,
        } => {
            let opts = RunOptions {
                dt,
                t_final,
                seed,
                record_every,
            };
            commands::run(&scenario, &out_dir, &opts, out)?;
            Ok(true)
        }
        Command::Verify { only, inject_fault } => {
            let fault = inject_fault.map(|f| match f {
                FaultArg::K2Sign => Fault::K2Sign,
            });
            let results = verify::run_selected(&only, fault);
            for r in &results {
                writeln!(out, "{r}")?;
            }
            if results.iter().all(|r| r.passed) {
                Ok(true)
            } else {
                Err(CliError::new(Failure::Numerical, "acceptance criteria failed"))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli, &mut out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(Failure::Validation as u8),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
