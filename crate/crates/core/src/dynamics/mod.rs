//! Fixed-point analysis of recurrent cells under a constant idle input:
//! iteration of the idle map, closed-form steady states, attractor counting
//! and the variability-among-attractors (VAA) score.

mod map;
mod steady;
mod vaa;

pub use map::{iterate_map, FnMap, IdleMap, StateMap, Trajectory, DIVERGENCE_NORM};
pub use steady::{gated_steady_state, linear_steady_state, scalar_fixed_points, task_initial_states};
pub use vaa::{
    classify_stability, single_linkage, vaa, vaa_of_finals, Stability, StabilityReport, DEFAULT_ITERATIONS,
    DEFAULT_TOLERANCE, STABILITY_HEADER,
};

use thiserror::Error;

use crate::cells::{CellError, CellFamily};
use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("at least one iteration is required")]
    ZeroIterations,
    #[error("at least two initial states are required, got {0}")]
    TooFewStates(usize),
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("iterates diverged at step {step} from {initial:?}")]
    Diverged { step: usize, initial: Vec<f64> },
    #[error("non-finite iterate from {initial:?}")]
    NonFinite { initial: Vec<f64> },
    #[error("spectral radius bound {0} is not below one")]
    NotContracting(f64),
    #[error("unit {unit} never updates under this input (1 − z = 0)")]
    DegenerateGate { unit: usize },
    #[error("closed-form steady state needs a minGRU, got {0}")]
    NotInputGated(CellFamily),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
