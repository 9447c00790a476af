use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mdinew_cli::config::{parse_config, Config};
use mdinew_cli::emit::{render, Format};
use mdinew_cli::error::{CliError, CliResult};
use mdinew_cli::scenarios;

#[derive(Parser)]
#[command(
    name = "mdinew",
    about = "Nonlinear entanglement witnessing with untrusted measurements",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in a config file.
    Run {
        /// Path to a `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Master seed, overriding any `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path, overriding any `out` in the config; stdout when
        /// neither is given.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
    /// Parse and validate a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the available scenarios.
    ListScenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

fn load_config(path: &PathBuf) -> CliResult<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read `{}`: {e}", path.display())))?;
    parse_config(&text)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            format,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.set("seed", s.to_string());
            }
            if let Some(p) = &out {
                cfg.set("out", p.display().to_string());
            }
            let output = scenarios::run(&cfg)?;
            let text = render(
                &output,
                match format {
                    OutFormat::Csv => Format::Csv,
                    OutFormat::Json => Format::Json,
                },
            );
            match cfg.raw("out") {
                Some(path) => std::fs::write(path, text)
                    .map_err(|e| CliError::io(format!("cannot write `{path}`: {e}")))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Validate { config } => {
            scenarios::validate(&load_config(&config)?)?;
            println!("ok");
            Ok(())
        }
        Command::ListScenarios => {
            for s in scenarios::registry() {
                println!("{:24}{}", s.name(), s.summary());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
