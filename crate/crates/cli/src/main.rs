use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_covers_cli::{describe, list_scenarios, run_scenario, CliError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "spectral-covers", version, about = "Spectral experiments on graph coverings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the scenarios.
    List,
    /// Run a scenario and write summary.json plus CSV files.
    Run {
        scenario: String,
        /// Parameter override, `key=value`; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Output directory, `out/<scenario>` by default.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// TOML file with `scenario`, `seed`, `out` and a `[params]` table.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn build_config(
    scenario: String,
    params: &[String],
    out: Option<PathBuf>,
    seed: Option<u64>,
    file: Option<PathBuf>,
) -> Result<ScenarioConfig, CliError> {
    let mut config = match file {
        Some(path) => {
            let config = ScenarioConfig::from_toml(&std::fs::read_to_string(&path)?)?;
            if config.scenario != scenario {
                return Err(CliError::Config(format!(
                    "{} names scenario {:?}, not {scenario:?}",
                    path.display(),
                    config.scenario
                )));
            }
            config
        }
        None => ScenarioConfig::new(scenario),
    };
    for p in params {
        config.set_param(p)?;
    }
    if out.is_some() {
        config.out = out;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            for name in list_scenarios() {
                println!("{name:<26} {}", describe(name).unwrap_or_default());
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            scenario,
            params,
            out,
            seed,
            config,
        } => {
            let config = match build_config(scenario, &params, out, seed, config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let output = match run_scenario(&config) {
                Ok(o) => o,
                Err(e @ (CliError::Config(_) | CliError::UnknownScenario(_))) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            let dir = config.output_dir();
            if let Err(e) = output.write(&dir) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
            for c in &output.summary.checks {
                let mark = if c.pass { "pass" } else { "FAIL" };
                println!(
                    "{mark}  {:<36} {:.9e} {} {:.9e} (tol {:.1e})",
                    c.name, c.lhs, c.relation, c.rhs, c.tol
                );
            }
            for note in &output.summary.notes {
                println!("note  {note}");
            }
            println!("reports in {}", dir.display());
            if output.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
    }
}
