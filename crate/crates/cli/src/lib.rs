//! Config-driven experiment runner for `cdkernel`.

pub mod config;
pub mod error;
pub mod models;
pub mod output;
pub mod run;

use std::path::Path;
use std::time::SystemTime;

pub use config::Config;
pub use error::CliError;
pub use run::{execute, Check, Outcome, Report};

/// Result of [`run_file`]: the process exit code and the failed checks.
pub struct RunStatus {
    pub exit_code: i32,
    pub failures: Vec<String>,
}

/// Reads a config, runs it on a pool of `jobs` workers and writes the
/// outputs into `out`. Exit code 0 if every asserted check passes, 1 if one
/// fails or the computation errors, 2 for an invalid config.
pub fn run_file(config_path: &Path, out: &Path, jobs: usize) -> Result<RunStatus, CliError> {
    let started = SystemTime::now();
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let config = Config::parse(&text)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
    let outcome = pool.install(|| execute(&config))?;
    output::write_outcome(&outcome, out)?;
    let failures: Vec<String> = outcome.failures().iter().map(|c| c.describe()).collect();
    let exit_code = if failures.is_empty() { 0 } else { 1 };
    output::write_metadata(out, jobs, started, exit_code)?;
    Ok(RunStatus { exit_code, failures })
}
