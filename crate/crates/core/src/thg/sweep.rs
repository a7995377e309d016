use crate::cells::{Model, Runner};
use crate::envs::{
    AnyEnv, EnvKind, LookupConfig, LookupTreeMaze, Pomdp, Range, ScriptedAgent, TMaze, TmazeConfig, RIGHT,
};
use crate::numerics::{argmax, Rng};

use super::{Behavior, ThgError};

pub const SOLVED_THRESHOLD: f64 = 3.5;
pub const TIMEOUT_REACH_THRESHOLD: f64 = 0.5;
pub const MIN_CLASSIFY_EPISODES: usize = 100;

/// Agent evaluated by a sweep.
pub trait EvalAgent {
    fn reset(&mut self);
    fn act(&mut self, obs: &[f64]) -> Result<usize, ThgError>;
    /// True when the last observation repeated the one before and left the
    /// agent's internal state bitwise unchanged: fed that observation again,
    /// the agent returns to the same state and repeats its action.
    fn state_fixed(&self) -> bool {
        false
    }
}

impl<A: ScriptedAgent> EvalAgent for A {
    fn reset(&mut self) {
        ScriptedAgent::reset(self);
    }

    fn act(&mut self, obs: &[f64]) -> Result<usize, ThgError> {
        Ok(ScriptedAgent::act(self, obs))
    }
}

/// Greedy policy: argmax of the actor's logits, ties to the lowest action.
pub struct ModelAgent {
    runner: Runner,
    last: Option<(Vec<f64>, Vec<f64>)>,
    fixed: bool,
    pub ties: usize,
}

impl ModelAgent {
    pub fn new(model: &Model) -> Self {
        Self {
            runner: Runner::new(model, 1),
            last: None,
            fixed: false,
            ties: 0,
        }
    }
}

impl EvalAgent for ModelAgent {
    fn reset(&mut self) {
        self.runner.reset();
        self.last = None;
        self.fixed = false;
    }

    fn act(&mut self, obs: &[f64]) -> Result<usize, ThgError> {
        let out = self.runner.step(obs, None)?;
        let logits = out.data();
        let best = argmax(logits);
        if logits.iter().filter(|&&v| v == logits[best]).count() > 1 {
            self.ties += 1;
        }
        let state = self.runner.state().flatten();
        self.fixed = matches!(&self.last, Some((o, h)) if o.as_slice() == obs && *h == state);
        match &mut self.last {
            Some((o, h)) => {
                o.clear();
                o.extend_from_slice(obs);
                *h = state;
            }
            None => self.last = Some((obs.to_vec(), state)),
        }
        Ok(best)
    }

    fn state_fixed(&self) -> bool {
        self.fixed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub reward: f64,
    pub steps: usize,
    pub timeout: bool,
}

/// Plays one episode. Once the agent is at a bitwise fixed point of its
/// state under a repeated observation, the rest of the episode is
/// determined, and two cases are settled without stepping:
///
/// - in a corridor, any action other than RIGHT keeps the observation idle
///   forever, so the episode times out; in the T-maze, RIGHT is
///   fast-forwarded to the cell before the junction;
/// - an action that leaves both the observation and the agent's position
///   unchanged repeats forever, so the episode times out.
pub fn run_episode(env: &mut AnyEnv, agent: &mut impl EvalAgent) -> Result<EpisodeOutcome, ThgError> {
    agent.reset();
    let idle = env.idle_observation();
    let mut obs = env.reset();
    let mut reward = 0.0;
    let stuck = |env: &AnyEnv, reward| EpisodeOutcome {
        reward,
        steps: env.time_limit(),
        timeout: true,
    };
    loop {
        let action = agent.act(&obs)?;
        let fixed = agent.state_fixed();
        if fixed && obs == idle {
            if action != RIGHT {
                return Ok(stuck(env, reward));
            }
            if let AnyEnv::Tmaze(maze) = env {
                let cells = maze.length().saturating_sub(2).saturating_sub(maze.position());
                if cells > 0 && !maze.skip_right(cells) {
                    return Ok(stuck(env, reward));
                }
            }
        }
        let before = env.locus();
        let step = env.step(action)?;
        reward += step.reward;
        if step.done {
            return Ok(EpisodeOutcome {
                reward,
                steps: env.elapsed(),
                timeout: step.timeout,
            });
        }
        if fixed && step.obs == obs && env.locus() == before {
            return Ok(stuck(env, reward));
        }
        obs = step.obs;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub env: EnvKind,
    /// T-maze lengths, or numbers of mazes for the LookupTreeMaze.
    pub horizons: Vec<usize>,
    pub episodes: usize,
    pub tau: usize,
    /// Maze length used for LookupTreeMaze horizons.
    pub lookup_length: usize,
}

impl SweepConfig {
    pub fn tmaze() -> Self {
        Self {
            env: EnvKind::Tmaze,
            horizons: vec![2, 5, 10, 100, 1000, 10_000],
            episodes: 100,
            tau: 4,
            lookup_length: 3,
        }
    }

    pub fn lookup() -> Self {
        Self {
            env: EnvKind::Lookup,
            horizons: vec![1, 10, 100, 1000, 10_000],
            ..Self::tmaze()
        }
    }

    fn validate(&self) -> Result<(), ThgError> {
        if self.horizons.is_empty() || self.horizons[0] == 0 || self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ThgError::BadHorizons);
        }
        Ok(())
    }

    pub fn make_env(&self, horizon: usize, rng: Rng) -> Result<AnyEnv, ThgError> {
        Ok(match self.env {
            EnvKind::Tmaze => AnyEnv::Tmaze(TMaze::with_rng(TmazeConfig::new(Range::fixed(horizon)?), rng)?),
            EnvKind::Lookup => AnyEnv::Lookup(LookupTreeMaze::with_rng(
                LookupConfig {
                    mazes: Range::fixed(horizon)?,
                    length: Range::fixed(self.lookup_length)?,
                    tau: self.tau,
                    ..LookupConfig::default()
                },
                rng,
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub horizon: usize,
    pub episodes: usize,
    pub mean_reward: f64,
    /// Episodes with the full reward of 4.
    pub success_frac: f64,
    /// Episodes ended by the task rather than by the step limit.
    pub reach_frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub model_id: String,
    pub env: EnvKind,
    pub entries: Vec<SweepEntry>,
}

pub const SWEEP_HEADER: &str = "model,family,regime,horizon,episodes,mean_reward,success_frac,reach_frac,class";

impl SweepResult {
    pub fn entry(&self, horizon: usize) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.horizon == horizon)
    }

    pub fn csv_rows(&self, family: &str, regime: &str) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                let class = classify_behavior(e).map_or_else(|_| "unclassified".to_string(), |b| b.to_string());
                format!(
                    "{},{family},{regime},{},{},{},{},{},{class}",
                    self.model_id, e.horizon, e.episodes, e.mean_reward, e.success_frac, e.reach_frac
                )
            })
            .collect()
    }
}

/// `timeout` if fewer than half the episodes reach the end, `solved` if the
/// mean reward is at least 3.5, `random` otherwise.
pub fn classify_behavior(entry: &SweepEntry) -> Result<Behavior, ThgError> {
    if entry.episodes < MIN_CLASSIFY_EPISODES {
        return Err(ThgError::TooFewEpisodes {
            needed: MIN_CLASSIFY_EPISODES,
            got: entry.episodes,
        });
    }
    Ok(if entry.reach_frac < TIMEOUT_REACH_THRESHOLD {
        Behavior::Timeout
    } else if entry.mean_reward >= SOLVED_THRESHOLD {
        Behavior::Solved
    } else {
        Behavior::Random
    })
}

/// Greedy evaluation at every horizon. Episode draws at each horizon come
/// from a stream derived from `seed` and the horizon.
pub fn horizon_sweep(
    agent: &mut impl EvalAgent,
    model_id: &str,
    cfg: &SweepConfig,
    seed: u64,
) -> Result<SweepResult, ThgError> {
    cfg.validate()?;
    let mut entries = Vec::with_capacity(cfg.horizons.len());
    for &horizon in &cfg.horizons {
        let rng = Rng::derive(seed, &format!("sweep.{}.{horizon}", cfg.env));
        let mut env = cfg.make_env(horizon, rng)?;
        let (mut total, mut success, mut reach) = (0.0, 0usize, 0usize);
        for _ in 0..cfg.episodes {
            let out = run_episode(&mut env, agent)?;
            total += out.reward;
            if (out.reward - 4.0).abs() < 1e-9 {
                success += 1;
            }
            if !out.timeout {
                reach += 1;
            }
        }
        let n = cfg.episodes.max(1) as f64;
        entries.push(SweepEntry {
            horizon,
            episodes: cfg.episodes,
            mean_reward: total / n,
            success_frac: success as f64 / n,
            reach_frac: reach as f64 / n,
        });
    }
    Ok(SweepResult {
        model_id: model_id.to_string(),
        env: cfg.env,
        entries,
    })
}
