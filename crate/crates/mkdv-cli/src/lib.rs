//! Experiment driver for the mKdV spectral laboratory.
//!
//! Configuration is a flat `key = value` file (one pair per line, `#`
//! comments); every experiment validates its parameters against the owning
//! module's preconditions before any computation starts, and reports are
//! emitted as CSV (the machine-diff surface) and JSON (the archival one).
//! Identical (config, seed) pairs produce byte-identical CSV.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{parse_config, ConfigErrors, Experiment, OutputFormat, RunConfig};
pub use report::{emit_csv, emit_json, parse_csv, ExperimentReport, ReportRow};
pub use runner::run;

/// Exit codes of the CLI: 0 pass, 1 acceptance failure, 2 usage/config error,
/// 3 numeric error.
pub fn exit_code_for(outcome: &Result<ExperimentReport, mkdv_lab::LabError>) -> i32 {
    match outcome {
        Ok(report) => {
            if report.pass {
                0
            } else {
                1
            }
        }
        Err(mkdv_lab::LabError::Numeric(_))
        | Err(mkdv_lab::LabError::BlowUp { .. })
        | Err(mkdv_lab::LabError::NonFinite { .. }) => 3,
        Err(_) => 2,
    }
}
