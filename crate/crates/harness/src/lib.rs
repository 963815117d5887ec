//! Batch experiments over `accel-core`: JSON configs in, CSV tables and a summary JSON out.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use checks::{run_checks, CheckOptions, CheckRow};
pub use commands::{cmd_compare, cmd_run, cmd_sweep, ExperimentResult, Summary};
pub use config::{ExperimentConfig, ValidationError};
pub use error::{HarnessError, HarnessResult};

use std::path::Path;

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> HarnessResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(ExperimentConfig::parse(&text)?)
}

/// Runs the invariant table, failing when any row fails.
pub fn cmd_check(opts: &CheckOptions) -> HarnessResult<Vec<CheckRow>> {
    let rows = run_checks(opts);
    let failed = rows.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(HarnessError::ChecksFailed {
            failed,
            total: rows.len(),
        });
    }
    Ok(rows)
}
