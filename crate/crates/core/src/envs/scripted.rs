//! Hand-written agents that act from observations alone.

use crate::numerics::Rng;

use super::{DOWN, RIGHT, UP};

pub trait ScriptedAgent {
    fn reset(&mut self);
    fn act(&mut self, obs: &[f64]) -> usize;
}

fn turn(goal: i8) -> usize {
    if goal < 0 {
        UP
    } else {
        DOWN
    }
}

fn read_ternary(slot: &[f64]) -> i8 {
    (slot[..3].iter().position(|&v| v == 1.0).unwrap_or(1) as i8) - 1
}

/// Remembers the goal shown at the first step, walks right, turns toward it.
#[derive(Debug, Default, Clone)]
pub struct TmazeOracle {
    goal: i8,
}

impl ScriptedAgent for TmazeOracle {
    fn reset(&mut self) {
        self.goal = 0;
    }

    fn act(&mut self, obs: &[f64]) -> usize {
        let g = read_ternary(obs);
        if g != 0 {
            self.goal = g;
        }
        if obs[3] == 1.0 {
            turn(self.goal)
        } else {
            RIGHT
        }
    }
}

/// Reads the table once and each maze's index, then turns toward the entry.
#[derive(Debug, Clone)]
pub struct LookupOracle {
    tau: usize,
    table: Vec<i8>,
    index: usize,
}

impl LookupOracle {
    pub fn new(tau: usize) -> Self {
        Self {
            tau,
            table: vec![0; tau],
            index: 0,
        }
    }
}

impl ScriptedAgent for LookupOracle {
    fn reset(&mut self) {
        self.table.fill(0);
        self.index = 0;
    }

    fn act(&mut self, obs: &[f64]) -> usize {
        let tau = self.tau;
        let shown: Vec<i8> = (0..tau).map(|j| read_ternary(&obs[3 * j..])).collect();
        if shown.iter().any(|&v| v != 0) {
            self.table = shown;
        }
        if let Some(i) = (0..tau).find(|&j| obs[3 * tau + j] == 1.0) {
            self.index = i;
        }
        if obs[4 * tau + 1] == 1.0 {
            turn(self.table[self.index])
        } else {
            RIGHT
        }
    }
}

/// Walks right and picks an arm uniformly at random at the junction.
#[derive(Debug, Clone)]
pub struct RandomJunction {
    rng: Rng,
    flag_at: usize,
}

impl RandomJunction {
    /// `flag_at` is the position of the corridor-end flag in the observation.
    pub fn new(rng: Rng, flag_at: usize) -> Self {
        Self { rng, flag_at }
    }
}

impl ScriptedAgent for RandomJunction {
    fn reset(&mut self) {}

    fn act(&mut self, obs: &[f64]) -> usize {
        if obs[self.flag_at] == 1.0 {
            if self.rng.coin() {
                UP
            } else {
                DOWN
            }
        } else {
            RIGHT
        }
    }
}
