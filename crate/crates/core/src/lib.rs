//! Recurrent policies on memory-demanding POMDPs: cells, environments, PPO
//! training, fixed-point analysis of the learned dynamics and horizon sweeps.

pub mod cells;
pub mod cli;
pub mod dynamics;
pub mod envs;
pub mod numerics;
pub mod ppo;
pub mod thg;
