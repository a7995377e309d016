//! Recurrent cells, the feed-forward networks built around them, and scan
//! evaluation for the input-gated cells.

mod arch;
mod cell;
mod gradcheck;
mod network;
mod scan;

pub use arch::{build_architecture, ArchKind, CellChoice, LOOKUP_DROPOUT};
pub use cell::{CellFamily, CellParams, ALPHA_FLOOR};
pub use gradcheck::{bptt_gradcheck, smooth_params, BpttCheck, GRADCHECK_INPUT, GRADCHECK_STEP, GRADCHECK_TOLERANCE};
pub use network::{HiddenState, Layer, LayerSpec, Model, NetworkSpec, Runner};
pub use scan::{inclusive_scan, scan_check, scan_forward, ScanCheck};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CellError {
    #[error("unknown cell family `{0}`")]
    UnknownFamily(String),
    #[error("zero-width layer")]
    ZeroWidth,
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value")]
    NonFinite,
    #[error("{0} gates depend on the state; scan evaluation needs an input-gated cell")]
    WrongFamily(CellFamily),
    #[error("illegal architecture: {0}")]
    IllegalArchitecture(String),
    #[error("invalid network spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
