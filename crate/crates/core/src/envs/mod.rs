//! The POMDP interface and the two memory benchmarks: the T-maze and the
//! LookupTreeMaze (a chain of T-mazes whose goals are read from a table shown
//! once at the start).

mod lookup;
mod scripted;
mod tmaze;

pub use lookup::{admissible_tables, LookupConfig, LookupTreeMaze};
pub use scripted::{LookupOracle, RandomJunction, ScriptedAgent, TmazeOracle};
pub use tmaze::{TMaze, TmazeConfig, TMAZE_OBS_WIDTH};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const ACTION_COUNT: usize = 4;
pub const RIGHT: usize = 0;
pub const UP: usize = 1;
pub const LEFT: usize = 2;
pub const DOWN: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("step called on a finished episode")]
    StepAfterDone,
    #[error("action {0} outside 0..4")]
    BadAction(usize),
    #[error("invalid environment configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Episode ended by the step limit rather than by the task.
    pub timeout: bool,
}

/// Discrete-action, episodic POMDP with a fixed observation width.
pub trait Pomdp {
    fn obs_width(&self) -> usize;
    fn action_count(&self) -> usize {
        ACTION_COUNT
    }
    /// Starts a new episode and returns the first observation.
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<Step, EnvError>;
    /// The observation seen in a corridor cell carrying no information.
    fn idle_observation(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    Tmaze,
    Lookup,
}

impl EnvKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::Tmaze => "tmaze",
            EnvKind::Lookup => "lookup",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tmaze" => Ok(EnvKind::Tmaze),
            "lookup" => Ok(EnvKind::Lookup),
            other => Err(EnvError::BadConfig(format!("unknown environment `{other}`"))),
        }
    }
}

/// Either environment behind one type, for code generic over the benchmark.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    Tmaze(TMaze),
    Lookup(LookupTreeMaze),
}

impl AnyEnv {
    /// Where the agent is: (maze index, position in the maze).
    pub fn locus(&self) -> (usize, usize) {
        match self {
            AnyEnv::Tmaze(e) => (0, e.position()),
            AnyEnv::Lookup(e) => (e.current_maze(), e.position()),
        }
    }

    pub fn elapsed(&self) -> usize {
        match self {
            AnyEnv::Tmaze(e) => e.elapsed(),
            AnyEnv::Lookup(e) => e.elapsed(),
        }
    }

    pub fn time_limit(&self) -> usize {
        match self {
            AnyEnv::Tmaze(e) => e.time_limit(),
            AnyEnv::Lookup(e) => e.time_limit(),
        }
    }
}

impl Pomdp for AnyEnv {
    fn obs_width(&self) -> usize {
        match self {
            AnyEnv::Tmaze(e) => e.obs_width(),
            AnyEnv::Lookup(e) => e.obs_width(),
        }
    }

    fn reset(&mut self) -> Vec<f64> {
        match self {
            AnyEnv::Tmaze(e) => e.reset(),
            AnyEnv::Lookup(e) => e.reset(),
        }
    }

    fn step(&mut self, action: usize) -> Result<Step, EnvError> {
        match self {
            AnyEnv::Tmaze(e) => e.step(action),
            AnyEnv::Lookup(e) => e.step(action),
        }
    }

    fn idle_observation(&self) -> Vec<f64> {
        match self {
            AnyEnv::Tmaze(e) => e.idle_observation(),
            AnyEnv::Lookup(e) => e.idle_observation(),
        }
    }
}

/// Writes the one-hot code of a value in {−1, 0, +1} into `out[..3]`.
pub(crate) fn ternary_one_hot(value: i8, out: &mut [f64]) {
    out[..3].fill(0.0);
    out[(value + 1) as usize] = 1.0;
}

/// Inclusive integer range `[lo, hi]` with `0 < lo ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range {
    pub lo: usize,
    pub hi: usize,
}

impl Range {
    pub fn new(lo: usize, hi: usize) -> Result<Self, EnvError> {
        if lo == 0 || lo > hi {
            return Err(EnvError::BadConfig(format!("range [{lo}, {hi}] needs 0 < lo <= hi")));
        }
        Ok(Self { lo, hi })
    }

    pub fn fixed(v: usize) -> Result<Self, EnvError> {
        Self::new(v, v)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl FromStr for Range {
    type Err = EnvError;

    /// `a-b` or a single value.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EnvError::BadConfig(format!("unparseable range `{s}`"));
        let (lo, hi) = match s.split_once('-') {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let v = s.trim().parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        Self::new(lo, hi)
    }
}
