use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qmarket::io::{load_run_spec, run, write_results, IoError};

#[derive(Parser)]
#[command(
    name = "qmarket",
    version,
    about = "Run quantum stock-market simulations from JSON run files"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a run file and write CSV tables plus manifest.json.
    Run {
        spec: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Parse and validate a run file, printing its canonical form.
    Check { spec: PathBuf },
}

fn execute(cli: Cli) -> Result<(), IoError> {
    match cli.command {
        Cmd::Run { spec, out } => {
            let spec = load_run_spec(&spec)?;
            let record = run(&spec)?;
            write_results(&record, &out)?;
            eprintln!(
                "{}: {} table(s) written to {} in {:.3?}",
                spec.command.kind(),
                record.tables.len(),
                out.display(),
                record.elapsed
            );
        }
        Cmd::Check { spec } => println!("{}", load_run_spec(&spec)?.canonical_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
