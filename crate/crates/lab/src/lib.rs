//! Experiment harness for max filter banks: configuration, subcommands and reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::path::{Path, PathBuf};

pub use commands::{run_command, Command};
pub use config::ExperimentConfig;
pub use error::{exit, LabError, LabResult};
pub use report::{Outcome, RunReport};

/// Runs one subcommand end to end and returns the process exit code.
pub fn run(command: Command, config_path: &Path, seed: u64, out: Option<PathBuf>) -> i32 {
    match run_inner(command, config_path, seed, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(command: Command, config_path: &Path, seed: u64, out: Option<PathBuf>) -> LabResult<i32> {
    let config = ExperimentConfig::read(config_path)?;
    let outcome = run_command(command, &config, seed)?;
    let dir = out.or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    let files = outcome.write(&dir)?;
    for a in &outcome.report.assertions {
        if a.passed {
            println!("PASS {}: observed {:e}, threshold {:e}", a.name, a.observed, a.threshold);
        } else {
            eprintln!(
                "FAIL {} ({}): observed {:e}, threshold {:e}, tolerance {:e}; {}",
                a.name, a.anchor, a.observed, a.threshold, a.tolerance, a.detail
            );
        }
    }
    println!("report: {}", files.report.display());
    println!("table: {}", files.table.display());
    println!("timings: {}", files.timings.display());
    Ok(if !outcome.report.passed {
        exit::ASSERTION_FAILED
    } else if !outcome.report.certified {
        eprintln!("a budgeted search stopped early; bounds are not certified");
        exit::BUDGET_EXCEEDED
    } else {
        exit::PASS
    })
}
