//! Command-line front end: runs derivative computations and experiments
//! from JSON configs, emitting report JSON and CSV series.
//!
//! Exit codes: 0 all verdicts pass, 1 input error, 2 verdict failure.
//! Thread count follows RAYON_NUM_THREADS.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use opint::cli;

#[derive(Parser)]
#[command(
    name = "opint",
    version,
    about = "Matrix-function derivative and operator-integral toolkit"
)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the command described by a JSON config file.
    Run {
        /// Path to the run config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for report JSON/CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Admit p = 1 and p = inf for norm diagnostics.
        #[arg(long)]
        diagnostics_mode: bool,
    },
    /// Print the experiment catalog with the claim each probe targets.
    ListExperiments,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run() -> opint::Result<ExitCode> {
    let args = Args::parse();
    match args.command {
        Cmd::ListExperiments => {
            for line in cli::list_experiments() {
                println!("{line}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run {
            config,
            seed,
            out,
            diagnostics_mode,
        } => {
            let mut cfg = cli::load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if diagnostics_mode {
                cfg.diagnostics_mode = true;
            }
            cfg.validate()?;
            let out_dir = out
                .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("reports"));
            let outcome = cli::run(&cfg, &out_dir)?;
            for report in &outcome.reports {
                let status = if report.passed() { "pass" } else { "FAIL" };
                println!("{}: {status} ({:?})", report.experiment, report.verdict);
            }
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::from(outcome.exit_code() as u8))
        }
    }
}
