use crate::numerics::Rng;

use super::{ternary_one_hot, EnvError, Pomdp, Range, Step, DOWN, LEFT, RIGHT, UP};

pub const TMAZE_OBS_WIDTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmazeConfig {
    /// Corridor length, drawn uniformly per episode.
    pub length: Range,
    /// Step limit is `timeout_per_cell · L + timeout_extra`.
    pub timeout_per_cell: usize,
    pub timeout_extra: usize,
}

impl TmazeConfig {
    pub fn new(length: Range) -> Self {
        Self {
            length,
            timeout_per_cell: 4,
            timeout_extra: 10,
        }
    }
}

/// Corridor `(0,0)..(L−1,0)` with arms `(L−1,−1)` (up) and `(L−1,+1)` (down).
/// The goal arm is shown only in the first observation.
#[derive(Debug, Clone)]
pub struct TMaze {
    cfg: TmazeConfig,
    rng: Rng,
    length: usize,
    goal: i8,
    x: usize,
    t: usize,
    limit: usize,
    done: bool,
}

impl TMaze {
    pub fn new(cfg: TmazeConfig, seed: u64) -> Result<Self, EnvError> {
        Self::with_rng(cfg, Rng::new(seed))
    }

    pub fn with_rng(cfg: TmazeConfig, rng: Rng) -> Result<Self, EnvError> {
        Range::new(cfg.length.lo, cfg.length.hi)?;
        Ok(Self {
            cfg,
            rng,
            length: cfg.length.lo,
            goal: 1,
            x: 0,
            t: 0,
            limit: 0,
            done: true,
        })
    }

    pub fn config(&self) -> &TmazeConfig {
        &self.cfg
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn goal(&self) -> i8 {
        self.goal
    }

    pub fn position(&self) -> usize {
        self.x
    }

    pub fn elapsed(&self) -> usize {
        self.t
    }

    pub fn time_limit(&self) -> usize {
        self.limit
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Starts an episode with a chosen goal instead of a sampled one.
    pub fn reset_with_goal(&mut self, goal: i8) -> Vec<f64> {
        self.length = self.rng.range_inclusive(self.cfg.length.lo, self.cfg.length.hi);
        self.goal = if goal < 0 { -1 } else { 1 };
        self.x = 0;
        self.t = 0;
        self.limit = self.cfg.timeout_per_cell * self.length + self.cfg.timeout_extra;
        self.done = false;
        self.observe()
    }

    /// Encodes a goal signal in {−1, 0, +1} and the corridor-end flag.
    pub fn observation(signal: i8, at_end: bool) -> Vec<f64> {
        let mut obs = vec![0.0; TMAZE_OBS_WIDTH];
        ternary_one_hot(signal, &mut obs);
        obs[3] = if at_end { 1.0 } else { 0.0 };
        obs
    }

    fn observe(&self) -> Vec<f64> {
        Self::observation(if self.t == 0 { self.goal } else { 0 }, self.x + 1 == self.length)
    }

    /// Moves the agent `cells` to the right as if it had stepped right that
    /// many times through idle corridor cells. Returns false (and ends the
    /// episode on timeout) if the step limit is reached first.
    pub(crate) fn skip_right(&mut self, cells: usize) -> bool {
        debug_assert!(self.x + cells < self.length);
        if self.t + cells >= self.limit {
            self.t = self.limit;
            self.done = true;
            return false;
        }
        self.x += cells;
        self.t += cells;
        true
    }
}

impl Pomdp for TMaze {
    fn obs_width(&self) -> usize {
        TMAZE_OBS_WIDTH
    }

    fn reset(&mut self) -> Vec<f64> {
        let goal = if self.rng.coin() { 1 } else { -1 };
        self.reset_with_goal(goal)
    }

    fn step(&mut self, action: usize) -> Result<Step, EnvError> {
        if action > DOWN {
            return Err(EnvError::BadAction(action));
        }
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        self.t += 1;
        let mut reward = 0.0;
        let at_junction = self.x + 1 == self.length;
        match action {
            RIGHT if !at_junction => self.x += 1,
            LEFT if self.x > 0 => self.x -= 1,
            UP | DOWN if at_junction => {
                let arm = if action == UP { -1 } else { 1 };
                reward = if arm == self.goal { 4.0 } else { -0.1 };
                self.done = true;
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
        Self::observation(0, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(len: usize) -> TmazeConfig {
        TmazeConfig::new(Range::fixed(len).unwrap())
    }

    #[test]
    fn goal_is_balanced() {
        let mut env = TMaze::new(fixed(3), 7).unwrap();
        let ups = (0..10_000).filter(|_| {
            env.reset();
            env.goal() == 1
        });
        let frac = ups.count() as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn same_seed_same_goal() {
        let mut a = TMaze::new(fixed(3), 5).unwrap();
        let mut b = TMaze::new(fixed(3), 5).unwrap();
        assert_eq!(a.reset(), b.reset());
        assert_eq!(a.goal(), b.goal());
    }

    #[test]
    fn observations() {
        let mut env = TMaze::new(fixed(1), 1).unwrap();
        let obs = env.reset_with_goal(1);
        assert_eq!(obs, vec![0.0, 0.0, 1.0, 1.0]);
        let mut env = TMaze::new(fixed(3), 1).unwrap();
        assert_eq!(env.reset_with_goal(1), vec![0.0, 0.0, 1.0, 0.0]);
        let s = env.step(RIGHT).unwrap();
        assert_eq!(s.obs, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.reward, 0.0);
        assert_eq!(env.position(), 1);
    }

    #[test]
    fn transitions_and_rewards() {
        let mut env = TMaze::new(fixed(3), 1).unwrap();
        env.reset_with_goal(1);
        env.step(RIGHT).unwrap();
        let s = env.step(UP).unwrap();
        assert_eq!((env.position(), s.reward, s.done), (1, 0.0, false));
        env.step(RIGHT).unwrap();
        let s = env.step(UP).unwrap();
        assert_eq!((s.reward, s.done), (-0.1, true));
        assert_eq!(env.step(RIGHT), Err(EnvError::StepAfterDone));

        env.reset_with_goal(-1);
        env.step(RIGHT).unwrap();
        env.step(RIGHT).unwrap();
        let s = env.step(UP).unwrap();
        assert_eq!((s.reward, s.done), (4.0, true));
        env.reset();
        assert_eq!(env.step(4), Err(EnvError::BadAction(4)));
    }

    #[test]
    fn times_out() {
        let mut env = TMaze::new(fixed(2), 1).unwrap();
        env.reset();
        let mut steps = 0;
        loop {
            steps += 1;
            let s = env.step(LEFT).unwrap();
            if s.done {
                assert!(s.timeout);
                break;
            }
        }
        assert_eq!(steps, 4 * 2 + 10);
    }
}
