//! Experiment runner: JSON configs in, CSV/JSON artifacts and a manifest out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod validate;

use std::path::{Path, PathBuf};

pub use config::{parse, ExperimentConfig, ExperimentKind};
pub use error::CliError;
pub use experiments::{run, RunManifest, RunOutcome};
pub use validate::{validate, Diagnostics};

/// Environment variable giving the default worker-thread count.
pub const THREADS_ENV: &str = "SPM_THREADS";

pub fn load(path: &Path) -> Result<(ExperimentConfig, String), CliError> {
    let raw = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = parse(&raw)?;
    Ok((cfg, raw))
}

/// `--out` wins over the config's `output_dir`, which defaults to `out`.
pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).or_else(|| cfg.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

pub fn run_file(path: &Path, out: Option<&Path>) -> Result<RunOutcome, CliError> {
    let (cfg, raw) = load(path)?;
    let dir = output_dir(&cfg, out);
    run(&cfg, &raw, &dir)
}
