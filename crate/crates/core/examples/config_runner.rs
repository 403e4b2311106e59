//! Runs every subcommand that a config file supports, as the `colombeau`
//! binary would, and prints the checks.
//!
//! ```text
//! cargo run --release --example config_runner -- configs/system.toml
//! ```

use std::path::PathBuf;

use colombeau_hyperbolic::runner::{load_config, run_config, RunError, Subcommand};

fn main() -> anyhow::Result<()> {
    let path: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "configs/system.toml".into()).into();
    let cfg = load_config(&path)?;
    for sub in Subcommand::ALL {
        match run_config(&cfg, sub) {
            Ok(out) => {
                for c in &out.checks {
                    println!("[{sub}] {c}");
                }
            }
            Err(RunError::Config(m)) => println!("[{sub}] skipped: {m}"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
