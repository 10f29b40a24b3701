//! Library side of the `lamkit` binary. Every subcommand is a plain
//! function here so it can be driven from tests without a subprocess.

mod args;
mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use thiserror::Error;

use lamkit_core::approx::ApproxError;
use lamkit_core::train::TrainError;

pub use args::{Cli, Command, Format};
pub use commands::{
    cmd_alpha, cmd_compare, cmd_evaluate, cmd_fit, cmd_linearise, cmd_pivot, cmd_synth, cmd_trinomial, AlphaReport,
    EvaluateRequest, FitRequest, SynthRequest,
};
pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] lamkit_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use lamkit_core::Error as E;
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Io { .. } => EXIT_DATA,
            Self::Core(E::Train(TrainError::NoConvergence { .. }))
            | Self::Core(E::Approx(ApproxError::NoConvergence { .. })) => EXIT_NUMERICAL,
            Self::Core(_) => EXIT_DATA,
        }
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Core(e.into())
            }
        }
    )*};
}

core_from!(
    lamkit_core::data::DataError,
    lamkit_core::model::ModelError,
    lamkit_core::train::TrainError,
    lamkit_core::metrics::MetricsError,
    lamkit_core::stats::StatsError,
    lamkit_core::approx::ApproxError
);

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Sidecar path for the manifest of a CSV output: `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    name.into()
}

/// Caps the global thread pool from `LAMKIT_THREADS` (unset or 0 means one
/// thread per core).
pub fn configure_threads(value: Option<&str>) -> Result<()> {
    let n = match value.map(str::trim) {
        None | Some("") => 0,
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("LAMKIT_THREADS must be a non-negative integer, got `{v}`")))?,
    };
    // a second call (tests driving `run` repeatedly) leaves the first pool in place
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads(std::env::var("LAMKIT_THREADS").ok().as_deref()) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
