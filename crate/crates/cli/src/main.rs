use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use splitlab_cli::{error_record, execute, write_error_record, Analysis, CliError, Overrides};

/// Runs a splitlab analysis from a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "splitlab", version)]
struct Args {
    analysis: Analysis,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        out: args.out.clone(),
        plots: args.plots,
    };
    match execute(args.analysis, &args.config, &overrides) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let record = error_record(Some(args.analysis), &err);
            eprint!("{record}");
            if let (CliError::Config(_), Some(dir)) = (&err, &args.out) {
                let _ = write_error_record(dir, Some(args.analysis), &err);
            }
            ExitCode::from(err.exit_code())
        }
    }
}
