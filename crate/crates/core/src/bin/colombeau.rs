use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use colombeau_hyperbolic::runner::{run, Subcommand};

/// Runs one experiment from a TOML config and prints a PASS/FAIL line per check.
///
/// Exit status: 0 all checks pass, 1 a check failed, 2 invalid config,
/// 3 numerical failure (a diagnostic file is written to the output directory).
#[derive(Parser)]
#[command(name = "colombeau", version)]
struct Cli {
    /// kernel, embed, growth, characteristics, solve, picard, transmit or associate
    #[arg(value_parser = |s: &str| s.parse::<Subcommand>())]
    subcommand: Subcommand,
    #[arg(long, short)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.config, cli.subcommand) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for c in &outcome.checks {
                println!("{c}");
            }
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
