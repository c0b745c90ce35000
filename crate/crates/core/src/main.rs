//! Command-line runner for valuation-adjustment experiments.
//!
//! Exit codes: 0 on success, 1 for configuration problems (unreadable or
//! invalid config, unknown scenario), 2 when any solver fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use xva::harness::{config, report, runner, scenarios};

#[derive(Parser)]
#[command(name = "xva", version, about = "Valuation-adjustment solvers and studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key=value config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
    },
    /// Run a builtin scenario and write its table to a file.
    Scenario {
        /// One of the names printed by list-scenarios.
        name: String,
        /// Directory for the output file (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the Monte-Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// List the builtin scenario names.
    ListScenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for config::OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => config::OutputFormat::Csv,
            Format::Json => config::OutputFormat::Json,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err((code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}

fn config_error() -> ExitCode {
    ExitCode::from(1)
}

fn solver_error() -> ExitCode {
    ExitCode::from(2)
}

fn run(cli: Cli) -> Result<ExitCode, (ExitCode, String)> {
    match cli.command {
        Command::Run { config: path } => {
            let cfg = config::ExperimentConfig::from_path(&path)
                .map_err(|e| (config_error(), e.to_string()))?;
            let outcome =
                runner::run_experiment(&cfg).map_err(|e| (solver_error(), e.to_string()))?;
            match &cfg.out {
                Some(path) => report::emit_to_path(&outcome.rows, cfg.format, path)
                    .map_err(|e| (solver_error(), e.to_string()))?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    report::emit(&outcome.rows, cfg.format, &mut lock)
                        .map_err(|e| (solver_error(), e.to_string()))?;
                }
            }
            finish(outcome.failures)
        }
        Command::Scenario {
            name,
            out,
            seed,
            format,
        } => {
            let mut cfg = scenarios::builtin(&name).ok_or_else(|| {
                (
                    config_error(),
                    format!(
                        "unknown scenario {name:?}; known: {}",
                        scenarios::names().join(", ")
                    ),
                )
            })?;
            if let Some(seed) = seed {
                cfg.mc.seed = seed;
            }
            cfg.format = format.into();
            let outcome =
                runner::run_experiment(&cfg).map_err(|e| (solver_error(), e.to_string()))?;
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            let path = dir.join(format!("{name}.{}", cfg.format.extension()));
            report::emit_to_path(&outcome.rows, cfg.format, &path)
                .map_err(|e| (solver_error(), e.to_string()))?;
            println!("{}", path.display());
            finish(outcome.failures)
        }
        Command::ListScenarios => {
            for name in scenarios::names() {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn finish(failures: Vec<String>) -> Result<ExitCode, (ExitCode, String)> {
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for failure in &failures {
            eprintln!("solver failure: {failure}");
        }
        Ok(solver_error())
    }
}
