//! Temporal horizon generalization: greedy evaluation of trained policies on
//! horizons far beyond training, behavior classes, read-out probes and
//! population summaries.

mod probe;
mod report;
mod sweep;

pub use probe::{perturbed_idle_check, readout_invariance_check, PerturbationReport, ReadoutReport};
pub use report::{population_report, ModelSummary, PopulationReport, CROSSTAB_HEADER, SCATTER_HEADER};
pub use sweep::{
    classify_behavior, horizon_sweep, run_episode, EpisodeOutcome, EvalAgent, ModelAgent, SweepConfig, SweepEntry,
    SweepResult, MIN_CLASSIFY_EPISODES, SOLVED_THRESHOLD, SWEEP_HEADER, TIMEOUT_REACH_THRESHOLD,
};

use std::fmt;

use thiserror::Error;

use crate::cells::CellError;
use crate::dynamics::DynamicsError;
use crate::envs::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Behavior {
    Timeout,
    Random,
    Solved,
}

impl Behavior {
    pub fn as_str(self) -> &'static str {
        match self {
            Behavior::Timeout => "timeout",
            Behavior::Random => "random",
            Behavior::Solved => "solved",
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThgError {
    #[error("classification needs at least {needed} episodes, got {got}")]
    TooFewEpisodes { needed: usize, got: usize },
    #[error("horizons must be positive and strictly increasing")]
    BadHorizons,
    #[error("population report needs at least two models, got {0}")]
    TooFewModels(usize),
    #[error("sweep belongs to model `{found}`, expected `{expected}`")]
    ModelMismatch { expected: String, found: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
