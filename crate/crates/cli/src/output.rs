use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

use crate::error::CliError;
use crate::run::Outcome;

/// Writes the report and the tables. Nothing here depends on the clock or
/// the worker count, so reruns are byte-identical.
pub fn write_outcome(outcome: &Outcome, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let report = out.join(&outcome.report.config.outputs.report);
    let mut text =
        serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    text.push('\n');
    fs::write(&report, text)?;
    written.push(report);
    for (name, table) in &outcome.tables {
        let path = out.join(name);
        fs::write(&path, table.to_csv())?;
        written.push(path);
    }
    Ok(written)
}

/// Run metadata kept apart from the deterministic outputs.
pub fn write_metadata(out: &Path, jobs: usize, started: SystemTime, exit_code: i32) -> Result<(), CliError> {
    let secs = |t: SystemTime| {
        t.duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0)
    };
    let finished = SystemTime::now();
    let meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "jobs": jobs,
        "started_unix": secs(started),
        "finished_unix": secs(finished),
        "exit_code": exit_code,
    });
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    text.push('\n');
    fs::create_dir_all(out)?;
    fs::write(out.join("metadata.json"), text)?;
    Ok(())
}
