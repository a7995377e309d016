//! Dense tensors, seeded randomness and the reverse-mode tape used for
//! backpropagation through time.

mod backend;
mod categorical;
mod gradcheck;
mod linalg;
mod rng;
mod tape;
mod tensor;

pub use backend::{Backend, Eager};
pub use categorical::{argmax, entropy, log_softmax, sample_categorical, softmax};
pub use gradcheck::{finite_diff_check, FdReport};
pub use linalg::{solve, spectral_radius_bound};
pub use rng::{Rng, RngState, RNG_ALGORITHM};
pub use tape::{heaviside, sigmoid, sign, Gradients, NodeId, Op, Tape, DEFAULT_SURROGATE_SLOPE};
pub use tensor::Tensor2;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("a {rows}x{cols} tensor cannot hold {len} values")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("shape mismatch at node {node} ({op}): {detail}")]
    ShapeMismatch {
        node: usize,
        op: &'static str,
        detail: String,
    },
    #[error("input `{0}` is not bound")]
    Unbound(String),
    #[error("backward requested before forward")]
    NotForwarded,
    #[error("non-finite value produced at node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },
    #[error("categorical distribution over zero logits")]
    EmptyLogits,
    #[error("non-finite logit")]
    NonFiniteLogits,
    #[error("singular matrix")]
    Singular,
}
