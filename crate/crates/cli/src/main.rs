use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use osc_cli::bench::{run_bench, write_outputs, BenchConfig};
use osc_cli::commands::{cmd_cluster, cmd_generate, ClusterArgs, GenerateArgs};
use osc_cli::{CliError, CliResult};

/// Ordered subspace clustering.
#[derive(Parser, Debug)]
#[command(name = "osc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic (or semi-synthetic) dataset with labels.
    Generate(GenerateArgs),
    /// Segment a data matrix and write labels plus diagnostics.
    Cluster(ClusterArgs),
    /// Run a benchmark sweep described by a JSON config.
    Bench {
        config: PathBuf,
        /// Directory for raw.csv, summary.csv and timing.csv.
        #[arg(long, default_value = "bench-out")]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(args) => {
            let spec = cmd_generate(&args)?;
            println!("{}", serde_json::to_string_pretty(&spec)?);
        }
        Command::Cluster(args) => {
            let doc = cmd_cluster(&args)?;
            if args.diagnostics.is_none() {
                println!("{}", serde_json::to_string_pretty(&doc)?);
            }
        }
        Command::Bench { config, out_dir } => {
            let cfg = BenchConfig::from_file(&config)?;
            let out = run_bench(&cfg)?;
            write_outputs(&out_dir, &cfg, &out)?;
            let failed = out.raw.iter().filter(|r| r.error.is_some()).count();
            eprintln!(
                "{} cells ({failed} failed) written to {}",
                out.raw.len(),
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Solver { dump, .. } = &e {
                if !dump.is_null() {
                    eprintln!("{}", serde_json::to_string_pretty(dump).unwrap_or_default());
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
