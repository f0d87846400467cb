//! Configuration-driven runner for the splitlab analyses.

pub mod analysis;
pub mod config;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};

use serde::Serialize;
use splitlab::LabError;
use thiserror::Error;

pub use config::{parse_config, parse_config_str, Analysis, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("numeric failure: {0}")]
    Numeric(LabError),
    #[error("check violated: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::CheckFailed(msg) => CliError::Check(msg),
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
            CliError::Check(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Check(_) => "check",
            CliError::Io(_) => "io",
        }
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub plots: bool,
}

/// Parses the configuration, applies overrides and runs the analysis.
/// Returns the written files in order.
pub fn execute(
    analysis: Analysis,
    config_path: &Path,
    overrides: &Overrides,
) -> Result<Vec<PathBuf>, CliError> {
    let mut config = parse_config(config_path)?;
    if let Some(declared) = config.analysis {
        if declared != analysis {
            return Err(CliError::Config(vec![format!(
                "configuration declares analysis `{declared}` but `{analysis}` was requested"
            )]));
        }
    }
    config.analysis = Some(analysis);
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.output.dir = out.clone();
    }
    let result = run(&config, overrides.plots);
    if let Err(e) = &result {
        // Best effort: the record also goes to stderr.
        let _ = write_error_record(&config.output.dir, Some(analysis), e);
    }
    result
}

/// Runs the configured analysis and writes its reports.
pub fn run(config: &RunConfig, plots: bool) -> Result<Vec<PathBuf>, CliError> {
    let analysis = config
        .analysis
        .ok_or_else(|| CliError::Config(vec!["no analysis selected".into()]))?;
    let mut report = output::Report::default();
    let outcome = match analysis {
        Analysis::TowerReport => analysis::tower_report(config, &mut report),
        Analysis::QeiReport => analysis::qei_report(config, &mut report),
        Analysis::NegstateVerify => analysis::negstate_verify(config, &mut report),
        Analysis::TestfnBuild => analysis::testfn_build(config, &mut report),
        Analysis::DistalDemo => analysis::distal_demo(config, &mut report),
    };
    // Whatever was computed before a check violation is still written out.
    let written = report.write(&config.output.dir, plots)?;
    outcome.map(|_| written)
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    analysis: Option<String>,
    kind: &'a str,
    exit_code: u8,
    message: String,
}

/// JSON error record for a failed run.
pub fn error_record(analysis: Option<Analysis>, err: &CliError) -> String {
    let record = ErrorRecord {
        analysis: analysis.map(|a| a.to_string()),
        kind: err.kind(),
        exit_code: err.exit_code(),
        message: err.to_string(),
    };
    serde_json::to_string_pretty(&record).expect("error record serializes") + "\n"
}

/// Writes `error.json` into `dir`.
pub fn write_error_record(
    dir: &Path,
    analysis: Option<Analysis>,
    err: &CliError,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("error.json"), error_record(analysis, err))
}
