//! `qtrap`: scenario runner for q-deformed trap simulations.

pub mod output;
pub mod presets;
pub mod runner;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

use qtrap_core::coupling::CouplingMode;
use qtrap_core::QtrapError;
use thiserror::Error;

pub use runner::{JobRecord, RunOptions, TauReport};
pub use scenario::Scenario;

pub const OUT_ENV: &str = "QTRAP_OUT";
pub const DEFAULT_OUT_DIR: &str = "qtrap_out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(QtrapError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<QtrapError> for CliError {
    fn from(e: QtrapError) -> Self {
        use QtrapError::*;
        match e {
            NotHermitian { .. }
            | Eigendecomposition(_)
            | StepSizeUnderflow { .. }
            | SeriesTruncation { .. }
            | FactorialRange { .. } => CliError::Numerical(e),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Read a scenario from a file, or from a bundled preset when no such file exists.
pub fn load_scenario(arg: &Path) -> Result<(Scenario, String), CliError> {
    let text = match std::fs::read_to_string(arg) {
        Ok(t) => t,
        Err(e) => match arg.to_str().and_then(presets::find) {
            Some(body) => body.to_string(),
            None => return Err(CliError::Config(format!("cannot read {}: {e}", arg.display()))),
        },
    };
    let scenario = Scenario::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", arg.display())))?;
    scenario.validate().map_err(CliError::Config)?;
    Ok((scenario, arg.display().to_string()))
}

/// `--out`, then `QTRAP_OUT`, then the scenario's `output_dir`, then [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(flag: Option<PathBuf>, env: Option<String>, scenario: &Scenario) -> PathBuf {
    flag.or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub struct RunArgs {
    pub scenario: PathBuf,
    pub out: Option<PathBuf>,
    pub mode: Option<CouplingMode>,
    pub threads: Option<usize>,
}

/// Runs a scenario and prints one summary line per written file.
pub fn run(args: RunArgs) -> Result<Vec<TauReport>, CliError> {
    let started = Instant::now();
    let (scenario, source) = load_scenario(&args.scenario)?;
    let out_dir = resolve_out_dir(args.out, std::env::var(OUT_ENV).ok(), &scenario);
    let opts = RunOptions {
        out_dir,
        mode: args.mode,
    };
    let threads = args.threads.unwrap_or(0);
    if args.threads == Some(0) {
        return Err(CliError::Config("--threads must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let reports = pool.install(|| runner::execute(&scenario, &opts))?;
    for r in reports.iter().flat_map(|r| &r.records) {
        println!(
            "tau={} job={} file={} wall={:.3}s",
            r.tau,
            r.job,
            opts.out_dir.join(&r.file).display(),
            r.wall_seconds
        );
    }
    for r in &reports {
        if let Some(w) = r.max_probe_tail_weight.filter(|w| *w > 1e-3) {
            log::warn!(
                "tau={}: Q-function probes lose up to {w:.2e} of their weight to truncation",
                r.tau
            );
        }
    }
    runner::write_metadata(
        &opts.out_dir,
        &source,
        &opts,
        pool.current_num_threads(),
        &reports,
        started.elapsed().as_secs_f64(),
    )?;
    Ok(reports)
}
