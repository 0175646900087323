//! The `dbar-akns` batch command line.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use config::{ConfigError, RunConfig};
pub use pipeline::{run_pipeline, write_artifacts, Command, ExitStatus, RunOutput, RunReport};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DBAR_AKNS_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "dbar-akns",
    version,
    about = "Dbar problem solver and AKNS potential reconstruction"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Single-threaded run with byte-identical artifacts across repeats.
    #[arg(long)]
    pub deterministic: bool,
    /// Directory for the CSV and report.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn thread_cap(value: Option<String>) -> Result<Option<usize>, ConfigError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::new(
                THREADS_ENV,
                format!("must be a positive integer, got {v:?}"),
            )),
        },
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::ConfigError.code()
            } else {
                0
            };
        }
    };
    let config = match RunConfig::from_path(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::ConfigError.code();
        }
    };
    let deterministic = cli.deterministic || config.deterministic;
    let threads = match thread_cap(std::env::var(THREADS_ENV).ok()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitStatus::ConfigError.code();
        }
    };
    let threads = if deterministic { Some(1) } else { threads };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitStatus::CheckFailed.code();
        }
    };
    let result = pool.install(|| run_pipeline(&config, cli.command));
    let out = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.status().code();
        }
    };
    if let Err(e) = write_artifacts(&out, &cli.out) {
        eprintln!(
            "error: cannot write artifacts to {}: {e}",
            cli.out.display()
        );
        return ExitStatus::CheckFailed.code();
    }
    for f in &out.report.failures {
        eprintln!("x = {}: {}", f.x, f.error);
    }
    for r in out.report.report.records.iter().filter(|r| !r.pass) {
        eprintln!(
            "check {} failed: observed {:e}, bound {:e} + {:e}",
            r.name, r.observed, r.bound_or_target, r.tolerance
        );
    }
    println!(
        "{}: {} checks, {} failed, {} solver failures, exit {}",
        cli.command.name(),
        out.report.report.records.len(),
        out.report.report.records.iter().filter(|r| !r.pass).count(),
        out.report.failures.len(),
        out.status.code()
    );
    out.status.code()
}
