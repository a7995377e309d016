//! Command-line entry points: configuration files, run directories with
//! manifests and checkpoints, and the CSV outputs of every analysis.

mod checkpoint;
mod commands;
mod config;
mod manifest;

pub use checkpoint::{content_hash, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use commands::{load_checkpoint, out_root, parse_seeds, run, run_training, Cli, Command, OUT_DIR_ENV};
pub use config::{parse_override, parse_pairs, RunConfig, CONFIG_KEYS};
pub use manifest::{RunManifest, RunStatus};

use std::path::PathBuf;

use thiserror::Error;

use crate::cells::CellError;
use crate::dynamics::DynamicsError;
use crate::envs::EnvError;
use crate::ppo::PpoError;
use crate::thg::ThgError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("missing configuration key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{path}: {reason}")]
    Csv { path: PathBuf, reason: String },
    #[error("seed {0} listed twice")]
    DuplicateSeed(u64),
    #[error("no completed runs under {0}")]
    NoRuns(PathBuf),
    #[error("run `{run}` failed: {reason}")]
    RunFailed { run: String, reason: String },
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Thg(#[from] ThgError),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
