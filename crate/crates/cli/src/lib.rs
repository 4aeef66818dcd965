//! `packlab` batch runner: resolves a config, runs one experiment on a sized worker pool,
//! and writes a JSON report plus a CSV table.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 failed assertion, 3 invalid config or budget.

pub mod config;
pub mod experiments;
pub mod fixtures;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{Experiment, Params, PushKind};
pub use report::{Assertion, Report, Table};

pub const THREADS_ENV: &str = "PACKLAB_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error(transparent)]
    Core(#[from] packlab_core::Error),
    #[error(transparent)]
    Fractal(#[from] packlab_fractal::FractalError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            _ => 3,
        }
    }
}

/// A finished run, not yet written anywhere.
pub struct Run {
    pub params: Params,
    pub report: Report,
    pub table: Table,
    pub summary: Vec<String>,
}

impl Run {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            0
        } else {
            2
        }
    }
}

/// Resolves `params` and runs `experiment` on the current worker pool.
pub fn execute(experiment: Experiment, params: Params) -> Result<Run, CliError> {
    let params = params.resolve(experiment)?;
    let config = params.to_value();
    let mut inputs = serde_json::to_vec(&config).expect("config serializes");
    if let Some(path) = &params.measure {
        inputs.extend(std::fs::read(path).map_err(|source| CliError::Io { path: path.clone(), source })?);
    }
    let out = experiments::dispatch(experiment, &params)?;
    let report = Report {
        schema_version: report::SCHEMA_VERSION,
        tool: "packlab",
        version: env!("CARGO_PKG_VERSION"),
        experiment,
        config,
        input_hash: report::content_hash(&inputs),
        assertions: out.assertions,
        result: out.result,
    };
    Ok(Run { params, report, table: out.table, summary: out.summary })
}

/// [`execute`] on a dedicated pool of `threads` workers.
pub fn execute_with_threads(experiment: Experiment, params: Params, threads: usize) -> Result<Run, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| execute(experiment, params))
}

#[derive(Debug, Parser)]
#[command(name = "packlab", version, about = "Finite-field packing verifier and Euclidean measure lab")]
struct Cli {
    /// Worker threads; overrides PACKLAB_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML file with one section per experiment; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a packing theorem on seeded random instances.
    FfVerify(RunArgs),
    /// Measure restriction ratios over sampled or all sets.
    FfRestrict(RunArgs),
    /// Fit the empirical constants across primes.
    FfConstants(RunArgs),
    /// Box-counting dimension of a fixture.
    FracDim(RunArgs),
    /// Fourier decay of a fixture.
    FracDecay(RunArgs),
    /// Circles translated along a Cantor set.
    FracUnion(RunArgs),
    /// Pushforward of a fixture under dilations, rotations or sums.
    FracPush(RunArgs),
    /// Print the fixture catalog.
    ListFixtures,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a count")))?),
            Err(_) => None,
        },
    };
    match n {
        Some(0) => Err(CliError::Config("thread count must be positive".into())),
        n => Ok(n),
    }
}

fn list_fixtures() {
    for f in fixtures::CATALOG {
        println!("{:<13} d={}  {}", f.name, f.d, f.role);
    }
}

fn run_command(experiment: Experiment, args: RunArgs, threads: Option<usize>) -> Result<i32, CliError> {
    let file = match &args.config {
        Some(path) => Params::from_file(path, experiment)?,
        None => Params::default(),
    };
    let params = file.overlay(args.params);
    let run = match threads {
        Some(t) => execute_with_threads(experiment, params, t)?,
        None => execute(experiment, params)?,
    };
    let json = run.params.json.clone().unwrap_or_else(|| PathBuf::from(format!("packlab-{}.json", experiment.name())));
    let csv = run.params.csv.clone().unwrap_or_else(|| PathBuf::from(format!("packlab-{}.csv", experiment.name())));
    report::write_file(&json, &run.report.to_json())?;
    report::write_file(&csv, &run.table.to_csv())?;
    println!("{}  {}", experiment.name(), run.report.input_hash);
    for line in &run.summary {
        println!("  {line}");
    }
    for a in &run.report.assertions {
        println!("  [{}] {}: {}", if a.passed { "pass" } else { "FAIL" }, a.name, a.detail);
    }
    println!("  wrote {} and {}", json.display(), csv.display());
    Ok(run.exit_code())
}

/// Parses `args` (program name first), runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    let (experiment, args) = match cli.command {
        Command::ListFixtures => {
            list_fixtures();
            return 0;
        }
        Command::FfVerify(a) => (Experiment::FfVerify, a),
        Command::FfRestrict(a) => (Experiment::FfRestrict, a),
        Command::FfConstants(a) => (Experiment::FfConstants, a),
        Command::FracDim(a) => (Experiment::FracDim, a),
        Command::FracDecay(a) => (Experiment::FracDecay, a),
        Command::FracUnion(a) => (Experiment::FracUnion, a),
        Command::FracPush(a) => (Experiment::FracPush, a),
    };
    let result = thread_count(cli.threads).and_then(|t| run_command(experiment, args, t));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("packlab: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_assertion_exits_2() {
        let mut run = execute(Experiment::FracDim, Params { fixture: Some("square".into()), n: Some(64), ..Default::default() }).unwrap();
        assert_eq!(run.exit_code(), 0);
        run.report.assertions.push(Assertion::new("forced", false, "test"));
        assert_eq!(run.exit_code(), 2);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 3);
        assert_eq!(CliError::Budget("x".into()).exit_code(), 3);
        let io = CliError::Io { path: "p".into(), source: std::io::Error::other("x") };
        assert_eq!(io.exit_code(), 1);
    }

    #[test]
    fn same_config_same_bytes() {
        let p = Params { theorem: Some(packlab_core::Theorem::PlanarThreshold), q: Some(3), trials: Some(30), seed: Some(1), ..Default::default() };
        let a = execute(Experiment::FfVerify, p.clone()).unwrap().report.to_json();
        let b = execute_with_threads(Experiment::FfVerify, p, 3).unwrap().report.to_json();
        assert_eq!(a, b);
    }
}
