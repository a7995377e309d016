use crate::numerics::Rng;

use super::{ternary_one_hot, EnvError, Pomdp, Range, Step, DOWN, LEFT, RIGHT, UP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookupConfig {
    /// Number of chained T-mazes.
    pub mazes: Range,
    /// Length of each T-maze, drawn independently.
    pub length: Range,
    /// Table size.
    pub tau: usize,
    /// Step limit is `timeout_per_cell · Σ lengths + timeout_per_maze · b`.
    pub timeout_per_cell: usize,
    pub timeout_per_maze: usize,
}

impl Default for LookupConfig {
    fn default() -> Self {
        Self {
            mazes: Range { lo: 1, hi: 20 },
            length: Range { lo: 1, hi: 3 },
            tau: 4,
            timeout_per_cell: 4,
            timeout_per_maze: 10,
        }
    }
}

impl LookupConfig {
    pub fn obs_width(&self) -> usize {
        3 * self.tau + self.tau + 2
    }

    /// Encodes an observation: table (or the zero table), index (or the
    /// absent slot) and the corridor-end flag.
    pub fn observation(&self, table: Option<&[i8]>, index: Option<usize>, at_end: bool) -> Vec<f64> {
        let tau = self.tau;
        let mut obs = vec![0.0; self.obs_width()];
        for j in 0..tau {
            ternary_one_hot(table.map_or(0, |t| t[j]), &mut obs[3 * j..]);
        }
        obs[3 * tau + index.unwrap_or(tau)] = 1.0;
        obs[4 * tau + 1] = if at_end { 1.0 } else { 0.0 };
        obs
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        Range::new(self.mazes.lo, self.mazes.hi)?;
        Range::new(self.length.lo, self.length.hi)?;
        if self.tau < 2 || self.tau > 20 {
            return Err(EnvError::BadConfig(format!("table size {} outside 2..=20", self.tau)));
        }
        Ok(())
    }
}

/// The `2^τ − 2` tables with at least one entry of each sign, in a fixed order.
pub fn admissible_tables(tau: usize) -> Vec<Vec<i8>> {
    (1..(1usize << tau) - 1)
        .map(|code| (0..tau).map(|j| if code >> j & 1 == 1 { 1 } else { -1 }).collect())
        .collect()
}

/// Chain of `b` T-mazes. The table is shown at the first step only; an index
/// into it, pointing at an entry equal to the current maze's goal, is shown at
/// the first step of every maze.
#[derive(Debug, Clone)]
pub struct LookupTreeMaze {
    cfg: LookupConfig,
    rng: Rng,
    table: Vec<i8>,
    lengths: Vec<usize>,
    goals: Vec<i8>,
    maze: usize,
    index: Option<usize>,
    x: usize,
    t: usize,
    limit: usize,
    done: bool,
}

impl LookupTreeMaze {
    pub fn new(cfg: LookupConfig, seed: u64) -> Result<Self, EnvError> {
        Self::with_rng(cfg, Rng::new(seed))
    }

    pub fn with_rng(cfg: LookupConfig, rng: Rng) -> Result<Self, EnvError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            rng,
            table: Vec::new(),
            lengths: Vec::new(),
            goals: Vec::new(),
            maze: 0,
            index: None,
            x: 0,
            t: 0,
            limit: 0,
            done: true,
        })
    }

    pub fn config(&self) -> &LookupConfig {
        &self.cfg
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }

    pub fn maze_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn current_maze(&self) -> usize {
        self.maze
    }

    /// Horizontal position inside the current maze.
    pub fn position(&self) -> usize {
        self.x
    }

    pub fn current_goal(&self) -> i8 {
        self.goals[self.maze.min(self.goals.len() - 1)]
    }

    pub fn elapsed(&self) -> usize {
        self.t
    }

    pub fn time_limit(&self) -> usize {
        self.limit
    }

    /// Starts an episode with a chosen table instead of a sampled one.
    pub fn reset_with_table(&mut self, table: &[i8]) -> Result<Vec<f64>, EnvError> {
        if table.len() != self.cfg.tau
            || table.iter().any(|&v| v != 1 && v != -1)
            || table.iter().all(|&v| v == table[0])
        {
            return Err(EnvError::BadConfig(format!("inadmissible table {table:?}")));
        }
        self.table = table.to_vec();
        let b = self.rng.range_inclusive(self.cfg.mazes.lo, self.cfg.mazes.hi);
        self.lengths = (0..b)
            .map(|_| self.rng.range_inclusive(self.cfg.length.lo, self.cfg.length.hi))
            .collect();
        self.goals = (0..b).map(|_| if self.rng.coin() { 1 } else { -1 }).collect();
        self.maze = 0;
        self.x = 0;
        self.t = 0;
        self.limit = self.cfg.timeout_per_cell * self.lengths.iter().sum::<usize>() + self.cfg.timeout_per_maze * b;
        self.done = false;
        self.draw_index();
        Ok(self.observe())
    }

    fn draw_index(&mut self) {
        let goal = self.goals[self.maze];
        let matching: Vec<usize> = (0..self.cfg.tau).filter(|&j| self.table[j] == goal).collect();
        self.index = Some(matching[self.rng.below(matching.len())]);
    }

    fn observe(&self) -> Vec<f64> {
        let len = self.lengths[self.maze.min(self.lengths.len() - 1)];
        let table = (self.t == 0).then_some(self.table.as_slice());
        self.cfg.observation(table, self.index, !self.done && self.x + 1 == len)
    }
}

impl Pomdp for LookupTreeMaze {
    fn obs_width(&self) -> usize {
        self.cfg.obs_width()
    }

    fn reset(&mut self) -> Vec<f64> {
        let count = (1usize << self.cfg.tau) - 2;
        let code = self.rng.below(count) + 1;
        let table: Vec<i8> = (0..self.cfg.tau)
            .map(|j| if code >> j & 1 == 1 { 1 } else { -1 })
            .collect();
        self.reset_with_table(&table).expect("sampled tables are admissible")
    }

    fn step(&mut self, action: usize) -> Result<Step, EnvError> {
        if action > DOWN {
            return Err(EnvError::BadAction(action));
        }
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        self.t += 1;
        self.index = None;
        let b = self.lengths.len();
        let at_junction = self.x + 1 == self.lengths[self.maze];
        let mut reward = 0.0;
        match action {
            RIGHT if !at_junction => self.x += 1,
            LEFT if self.x > 0 => self.x -= 1,
            UP | DOWN if at_junction => {
                let arm = if action == UP { -1 } else { 1 };
                let gain = if arm == self.goals[self.maze] { 4.0 } else { -0.1 };
                reward = gain / b as f64;
                self.maze += 1;
                self.x = 0;
                if self.maze == b {
                    self.done = true;
                } else {
                    self.draw_index();
                }
            }
            _ => {}
        }
        let mut timeout = false;
        if !self.done && self.t >= self.limit {
            self.done = true;
            timeout = true;
        }
        Ok(Step {
            obs: self.observe(),
            reward,
            done: self.done,
            timeout,
        })
    }

    fn idle_observation(&self) -> Vec<f64> {
        self.cfg.observation(None, None, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mazes: (usize, usize), length: (usize, usize), tau: usize) -> LookupConfig {
        LookupConfig {
            mazes: Range::new(mazes.0, mazes.1).unwrap(),
            length: Range::new(length.0, length.1).unwrap(),
            tau,
            ..LookupConfig::default()
        }
    }

    #[test]
    fn tables_uniform_and_admissible() {
        let mut env = LookupTreeMaze::new(cfg((1, 1), (1, 1), 3), 3).unwrap();
        let tables = admissible_tables(3);
        assert_eq!(tables.len(), 6);
        let mut counts = [0usize; 6];
        let n = 100_000;
        for _ in 0..n {
            env.reset();
            let k = tables.iter().position(|t| t == env.table()).expect("admissible");
            counts[k] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 6.0).abs() < 0.01);
        }
    }

    #[test]
    fn degenerate_maze_count() {
        let mut env = LookupTreeMaze::new(cfg((5, 5), (1, 3), 4), 1).unwrap();
        for _ in 0..50 {
            env.reset();
            assert_eq!(env.maze_count(), 5);
        }
    }

    #[test]
    fn index_distribution() {
        let mut env = LookupTreeMaze::new(cfg((1, 1), (2, 2), 4), 9).unwrap();
        let table = [1, 1, -1, 1];
        let mut counts = [0usize; 4];
        let mut trials = 0;
        while trials < 10_000 {
            let obs = env.reset_with_table(&table).unwrap();
            if env.current_goal() != 1 {
                continue;
            }
            trials += 1;
            let i = (0..5).position(|j| obs[12 + j] == 1.0).unwrap();
            counts[i] += 1;
        }
        assert_eq!(counts[2], 0);
        for i in [0, 1, 3] {
            assert!((counts[i] as f64 / 1e4 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn junction_reward_scaled_by_maze_count() {
        let mut env = LookupTreeMaze::new(cfg((4, 4), (1, 1), 4), 2).unwrap();
        env.reset();
        let goal = env.current_goal();
        let s = env.step(if goal == 1 { DOWN } else { UP }).unwrap();
        assert_eq!(s.reward, 1.0);
        assert!(!s.done);
        assert_eq!(env.current_maze(), 1);
        let i = (0..5).position(|j| s.obs[12 + j] == 1.0).unwrap();
        assert!(i < 4);
        assert_eq!(env.table()[i], env.current_goal());
        for j in 0..4 {
            assert_eq!(&s.obs[3 * j..3 * j + 3], &[0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn index_only_on_first_step_of_maze() {
        let mut env = LookupTreeMaze::new(cfg((2, 2), (3, 3), 4), 2).unwrap();
        let obs = env.reset();
        assert_eq!(obs[16], 0.0);
        let s = env.step(RIGHT).unwrap();
        assert_eq!(s.obs[16], 1.0);
        assert_eq!(s.obs, env.idle_observation());
        let s = env.step(RIGHT).unwrap();
        assert_eq!(s.obs[17], 1.0);
    }
}
