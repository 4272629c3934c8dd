use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

use torusflow_cli::config::EngineKind;
use torusflow_cli::{run, Command, ExperimentConfig, Overrides};

/// Exact discrepancy of linear torus flows against polytopes.
#[derive(Parser, Debug)]
#[command(name = "torusflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Certification precision in bits
    #[arg(long, global = true, value_name = "BITS", env = "TORUSFLOW_PRECISION_BITS")]
    precision: Option<u32>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineKind>,
    /// Seed for randomized instances
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = &cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(2);
    };
    let mut cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    Overrides { precision_bits: cli.precision, out: cli.out, engine: cli.engine, seed: cli.seed }.apply(&mut cfg);
    match run(cli.command, &cfg) {
        Ok(out) => {
            println!("{}", serde_json::to_string(&out.summary).expect("summary is JSON"));
            eprintln!("wrote {} files to {}", out.files.len(), out.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
