//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Task};
use crate::report::{report_merge, RunReport};
use crate::run_config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dyadic-lab", version, about = "Run dyadic weighted-estimate experiments from a JSON config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every task in the config.
    Run(RunArgs),
    /// Weight characteristics, one-weight and duality checks.
    WeightsCheck(RunArgs),
    /// Weighted BMO norms of symbols.
    Bmo(RunArgs),
    /// Apply model operators and compare against the reference implementation.
    OpApply(RunArgs),
    /// Sampled weighted operator norms.
    NormEstimate(RunArgs),
    /// Commutator upper bounds and complexity sweeps.
    CommutatorVerify(RunArgs),
    /// Recover the BMO norm from commutator lower bounds.
    LowerBound(RunArgs),
    /// Build the extrapolation weights and check their properties.
    Extrapolate(RunArgs),
    /// Merge several run reports into one.
    Merge {
        reports: Vec<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the grid depths, written `N1xN2`.
    #[arg(long, value_parser = parse_depth)]
    depth: Option<[u32; 2]>,
    /// Overrides the base seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_depth(s: &str) -> Result<[u32; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected N1xN2")?;
    let p = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
    Ok([p(a)?, p(b)?])
}

fn command_filter(c: &Command) -> Option<&'static str> {
    match c {
        Command::WeightsCheck(_) => Some("weights-check"),
        Command::Bmo(_) => Some("bmo"),
        Command::OpApply(_) => Some("op-apply"),
        Command::NormEstimate(_) => Some("norm-estimate"),
        Command::CommutatorVerify(_) => Some("commutator-verify"),
        Command::LowerBound(_) => Some("lower-bound"),
        Command::Extrapolate(_) => Some("extrapolate"),
        Command::Run(_) | Command::Merge { .. } => None,
    }
}

/// Parses `args` (including the program name) and returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
        }
    };
    let only = command_filter(&cli.command);
    match cli.command {
        Command::Merge { reports, out } => merge(&reports, out),
        Command::Run(a)
        | Command::WeightsCheck(a)
        | Command::Bmo(a)
        | Command::OpApply(a)
        | Command::NormEstimate(a)
        | Command::CommutatorVerify(a)
        | Command::LowerBound(a)
        | Command::Extrapolate(a) => run(a, only),
    }
}

fn run(a: RunArgs, only: Option<&str>) -> i32 {
    let mut cfg = match ExperimentConfig::load(&a.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("schema error: {e}");
            return EXIT_SCHEMA;
        }
    };
    if let Some(base) = a.config.parent() {
        cfg.rebase(base);
    }
    if let Some(d) = a.depth {
        cfg.depths = d;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(c) = only {
        if !cfg.tasks.iter().any(|t: &Task| t.command() == c) {
            eprintln!("warning: the config has no {c} tasks");
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILED;
        }
    };
    let report = match pool.install(|| run_config(&cfg, only, &a.out)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", a.out.display());
            return EXIT_FAILED;
        }
    };
    summarize(&report)
}

fn summarize(report: &RunReport) -> i32 {
    let failures = report.failures();
    println!("{} checks, {} failed", report.checks.len(), failures.len());
    for id in &failures {
        let c = &report.checks[*id];
        match &c.detail {
            Some(d) => println!("FAIL {id}: {d}"),
            None => println!("FAIL {id}"),
        }
    }
    if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn merge(paths: &[PathBuf], out: Option<PathBuf>) -> i32 {
    let mut reports = Vec::new();
    for p in paths {
        let parsed = std::fs::read_to_string(p)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<RunReport>(&t).map_err(|e| e.to_string()));
        match parsed {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("schema error: {}: {e}", p.display());
                return EXIT_SCHEMA;
            }
        }
    }
    let merged = match report_merge(&reports) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SCHEMA;
        }
    };
    let text = merged.to_json();
    match out {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, text) {
                eprintln!("error: {}: {e}", p.display());
                return EXIT_FAILED;
            }
        }
        None => print!("{text}"),
    }
    summarize_quiet(&merged)
}

fn summarize_quiet(r: &RunReport) -> i32 {
    if r.passed() {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_syntax() {
        assert_eq!(parse_depth("3x4"), Ok([3, 4]));
        assert!(parse_depth("3").is_err());
        assert!(parse_depth("3xy").is_err());
    }

    #[test]
    fn missing_config_is_a_schema_error() {
        assert_eq!(main(["dyadic-lab", "run", "--config", "/nonexistent/c.json"]), EXIT_SCHEMA);
        assert_eq!(main(["dyadic-lab", "frobnicate"]), EXIT_SCHEMA);
    }
}
