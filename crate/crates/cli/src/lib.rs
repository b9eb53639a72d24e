//! Config-driven experiment runner for `dyadic-core`.
//!
//! A run reads an [`ExperimentConfig`], executes its tasks (optionally only
//! those of one command) and writes a [`RunReport`] plus one JSON artifact per
//! task into the output directory.

pub mod cli;
pub mod config;
pub mod report;
pub mod tasks;

use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, SchemaError};
pub use report::{report_merge, CheckEntry, RunReport, Status};

/// Runs every task whose command matches `only` (all tasks when `None`).
///
/// Task failures become failed checks; only I/O on `out` itself is an error.
pub fn run_config(cfg: &ExperimentConfig, only: Option<&str>, out: &Path) -> std::io::Result<RunReport> {
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    let canonical = serde_json::to_string(cfg).expect("configs serialize");
    let mut report = RunReport::new(report::digest_text(&canonical));
    match tasks::Runner::new(cfg, out) {
        Ok(runner) => {
            for t in cfg.tasks.iter().filter(|t| only.is_none_or(|c| t.command() == c)) {
                runner.run_task(t, &mut report);
            }
        }
        Err(e) => report.insert("config/grid", CheckEntry::outcome(false).with_detail(e.to_string())),
    }
    report.wall_clock_ms = Some(start.elapsed().as_millis() as u64);
    std::fs::write(out.join("report.json"), report.to_json())?;
    Ok(report)
}
