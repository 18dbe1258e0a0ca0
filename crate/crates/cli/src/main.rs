use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dvoc_cli::presets::{self, PRESETS};
use dvoc_cli::report::certificate_report;
use dvoc_cli::run::{execute, write_artifacts, RunError};
use dvoc_cli::scenario::{Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "dvoc", version, about = "Certify and simulate grid-forming oscillator controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or preset and write reports and CSV traces.
    Run {
        /// Path to a scenario TOML file, or a preset name.
        scenario: String,
        /// Output directory [default: out/<scenario name>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the randomized property suite with this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the certificate report as JSON.
    Certify {
        scenario: String,
        /// Full-order tuning parameter; overrides the scenario value.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// List the bundled presets.
    ListPresets,
}

fn load(arg: &str) -> Result<Scenario, RunError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return Ok(Scenario::parse(&text)?);
    }
    match presets::find(arg) {
        Some(p) => Ok(p.scenario()?),
        None => {
            Err(ScenarioError::new("", format!("`{arg}` is neither a file nor a preset (see list-presets)")).into())
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { scenario, out, seed } => {
            let plan = load(&scenario)?.resolve()?;
            let artifacts = execute(&plan, seed)?;
            let dir = out.unwrap_or_else(|| Path::new("out").join(&plan.name));
            write_artifacts(&artifacts, &dir)?;
            println!("wrote {}", dir.display());
            if let Some(msg) = artifacts.failure {
                return Err(RunError::Numerical(msg));
            }
        }
        Command::Certify { scenario, epsilon } => {
            let plan = load(&scenario)?.resolve()?;
            let report = certificate_report(&plan, epsilon)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::ListPresets => {
            for p in PRESETS {
                let description = p.scenario().map(|s| s.description).unwrap_or_default();
                println!("{:<16} {}", p.name, description);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
