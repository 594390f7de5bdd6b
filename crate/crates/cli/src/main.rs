use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermoflock_cli::builtins::{builtin, list_builtins};
use thermoflock_cli::scenario::{CheckName, ModelChoice};
use thermoflock_cli::{load_with, run, CliError, Overrides};
use thermoflock_core::Scheme;

#[derive(Parser)]
#[command(name = "thermoflock", version, about = "Thermo-mechanical Cucker-Smale flocking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario, write CSV output and evaluate its checks.
    Run {
        /// Path to a TOML scenario, or `builtin:NAME`.
        scenario: String,
        /// Override the model: pbcs, kbcs or both.
        #[arg(long)]
        model: Option<ModelChoice>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// rk4 or euler.
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Replace the scenario's checks; repeat for several.
        #[arg(long = "check")]
        checks: Vec<CheckName>,
        /// Seed for randomly drawn initial data.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the built-in scenarios.
    List,
    /// Print a built-in scenario as TOML.
    Show { name: String },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run {
            scenario,
            model,
            out,
            dt,
            t_end,
            scheme,
            checks,
            seed,
        } => {
            let overrides = Overrides {
                model,
                dt,
                t_end,
                scheme,
                checks: (!checks.is_empty()).then_some(checks),
                seed,
            };
            let scenario = load_with(&scenario, &overrides)?;
            let output = run(&scenario, &out)?;
            print!("{}", output.report);
            Ok(output.exit_code())
        }
        Command::List => {
            for b in list_builtins() {
                println!("{:<16}{}", b.name, b.description);
            }
            Ok(0)
        }
        Command::Show { name } => {
            let name = name.strip_prefix("builtin:").unwrap_or(&name);
            let file = builtin(name).ok_or_else(|| CliError::UnknownBuiltin(name.to_string()))?;
            print!("{}", file.to_toml());
            Ok(0)
        }
    }
}
