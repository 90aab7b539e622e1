//! Configuration-driven front end for the `oscillate` library.
//!
//! A run reads one TOML file, executes one command and writes its artifacts
//! into an output directory:
//!
//! | command    | artifacts                                              |
//! |------------|--------------------------------------------------------|
//! | `solve`    | `trajectory.tsv`, `zeros.tsv`, optional `riccati.tsv`  |
//! | `check`    | `verdicts.json`                                        |
//! | `sweep`    | `sweep.csv`, `sweep.json`                              |
//! | `spectral` | `spectral.json`, `rayleigh.tsv`                        |
//! | `geometry` | `geometry.tsv`, `geometry.json`                        |
//!
//! Text tables start with a `#` provenance header echoing the configuration;
//! JSON outputs get a sibling `config.echo.toml` instead.

pub mod checks;
pub mod commands;
pub mod config;
pub mod resolve;

pub use checks::{CheckFailure, Tuning};
pub use commands::Command;
pub use config::{ConfigError, ExperimentConfig};

use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_HORIZON: f64 = 1e4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {error}")]
    Numerical { context: String, error: oscillate::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => EXIT_CONFIG,
            RunError::Numerical { error, .. } => error_code(error),
        }
    }
}

fn error_code(e: &oscillate::Error) -> i32 {
    match e {
        oscillate::Error::HypothesisViolated(_) => EXIT_HYPOTHESIS,
        oscillate::Error::InvalidParams(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Command-line level overrides of the configuration.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub command: Option<Command>,
    pub out_dir: Option<PathBuf>,
    pub tol: Option<f64>,
    pub horizon: Option<f64>,
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub command: Command,
    pub artifacts: Vec<PathBuf>,
    /// Checker errors that did not stop the run.
    pub failures: Vec<CheckFailure>,
}

impl RunSummary {
    /// Hypothesis violations take precedence over other checker failures.
    pub fn exit_code(&self) -> i32 {
        self.failures.iter().map(|f| error_code(&f.error)).fold(EXIT_OK, |acc, c| match (acc, c) {
            (EXIT_HYPOTHESIS, _) | (_, EXIT_HYPOTHESIS) => EXIT_HYPOTHESIS,
            (a, b) => a.max(b),
        })
    }
}

pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let source = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    run_source(&source, Some(path), opts)
}

/// Runs a configuration given as text; `config_path` anchors a relative `settings.out`.
pub fn run_source(source: &str, config_path: Option<&Path>, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let cfg = ExperimentConfig::parse(source)?;
    let s = &cfg.raw.settings;
    let command = match (opts.command, &s.command) {
        (Some(c), _) => c,
        (None, Some(name)) => Command::parse(name)
            .ok_or_else(|| cfg.error("settings", Some("command"), format!("unknown command `{name}`")))?,
        (None, None) => return Err(cfg.error("settings", Some("command"), "no command given").into()),
    };
    let mut overrides = Vec::new();
    let tol = match opts.tol {
        Some(t) if !(t > 0.0) => return Err(cfg.error("", None, format!("--tol must be positive, got {t}")).into()),
        Some(t) => {
            overrides.push(("tol".to_string(), oscillate::report::fmt_g12(t)));
            t
        }
        None => s.tol.unwrap_or(DEFAULT_TOL),
    };
    let horizon = match opts.horizon {
        Some(h) if !(h > 0.0) => return Err(cfg.error("", None, format!("--horizon must be positive, got {h}")).into()),
        Some(h) => {
            overrides.push(("horizon".to_string(), oscillate::report::fmt_g12(h)));
            h
        }
        None => s.horizon.unwrap_or(DEFAULT_HORIZON),
    };
    let jobs = opts.jobs.or(s.jobs).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(cfg.error("", None, "--jobs must be at least 1").into());
    }
    let out = opts.out_dir.clone().unwrap_or_else(|| commands::default_out_dir(&cfg, config_path));
    let ctx = commands::Context {
        cfg: &cfg,
        command,
        out,
        tuning: Tuning { tol, horizon },
        header: commands::provenance_header(&cfg, command, &overrides),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RunError::Config(ConfigError { section: String::new(), key: None, line: None, message: e.to_string() }))?;
    let outcome = pool.install(|| commands::execute(&ctx))?;
    Ok(RunSummary { command, artifacts: outcome.artifacts, failures: outcome.failures })
}
