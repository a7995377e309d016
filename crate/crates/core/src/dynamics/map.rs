use crate::cells::{HiddenState, Model, Runner};
use crate::numerics::Tensor2;

use super::DynamicsError;

/// A deterministic map on flat state vectors.
pub trait StateMap {
    fn dim(&self) -> usize;
    fn apply(&mut self, h: &[f64]) -> Result<Vec<f64>, DynamicsError>;
}

/// Map given by a closure, for synthetic systems.
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(&[f64]) -> Vec<f64>> FnMap<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(&[f64]) -> Vec<f64>> StateMap for FnMap<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&mut self, h: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        Ok((self.f)(h))
    }
}

/// One recurrent step of a model under a constant input `x̄`, on the
/// concatenated state of all recurrent layers. Readout layers are skipped and
/// dropout is off.
pub struct IdleMap<'m> {
    model: &'m Model,
    runner: Runner,
    features: Tensor2,
    x_bar: Vec<f64>,
}

impl<'m> IdleMap<'m> {
    pub fn new(model: &'m Model, x_bar: &[f64]) -> Result<Self, DynamicsError> {
        if x_bar.len() != model.spec().input {
            return Err(DynamicsError::WidthMismatch {
                expected: model.spec().input,
                got: x_bar.len(),
            });
        }
        let runner = Runner::new(model, 1);
        let features = runner.features(x_bar)?;
        Ok(Self {
            model,
            runner,
            features,
            x_bar: x_bar.to_vec(),
        })
    }

    pub fn x_bar(&self) -> &[f64] {
        &self.x_bar
    }

    pub fn model(&self) -> &Model {
        self.model
    }
}

impl StateMap for IdleMap<'_> {
    fn dim(&self) -> usize {
        self.model.spec().state_width()
    }

    fn apply(&mut self, h: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let state = HiddenState::from_flat(self.model.spec(), h)?;
        self.runner.set_state(&state)?;
        self.runner.advance_features(&self.features)?;
        Ok(self.runner.state().flatten())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub last: Vec<f64>,
    /// First step at which successive iterates differed by less than the
    /// convergence threshold in max-norm.
    pub converged_at: Option<usize>,
}

pub const DIVERGENCE_NORM: f64 = 1e6;

/// `U^M(h0)`, tracking the first step where `‖h_t − h_{t−1}‖_∞ < threshold`.
pub fn iterate_map(map: &mut impl StateMap, h0: &[f64], m: usize, threshold: f64) -> Result<Trajectory, DynamicsError> {
    if m == 0 {
        return Err(DynamicsError::ZeroIterations);
    }
    let mut h = h0.to_vec();
    let mut converged_at = None;
    for step in 1..=m {
        let next = map.apply(&h)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { initial: h0.to_vec() });
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > DIVERGENCE_NORM {
            return Err(DynamicsError::Diverged {
                step,
                initial: h0.to_vec(),
            });
        }
        if converged_at.is_none() {
            let diff = next.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if diff < threshold {
                converged_at = Some(step);
            }
        }
        h = next;
    }
    Ok(Trajectory { last: h, converged_at })
}
