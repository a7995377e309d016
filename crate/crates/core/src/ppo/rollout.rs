use crate::cells::{Model, Runner};
use crate::envs::Pomdp;
use crate::numerics::{log_softmax, sample_categorical, Rng};

use super::PpoError;

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub logps: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Value of the state after the last step: 0 at a terminal state, the
    /// critic's estimate when the episode was cut by the step limit.
    pub bootstrap: f64,
    pub timeout: bool,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub episodes: Vec<Episode>,
}

impl RolloutBuffer {
    pub fn steps(&self) -> usize {
        self.episodes.iter().map(Episode::len).sum()
    }

    pub fn mean_reward(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().map(Episode::total_reward).sum::<f64>() / self.episodes.len() as f64
    }
}

/// Runs whole episodes with actions sampled from the policy until at least
/// `sample_steps` steps are collected. Both networks see the raw observations
/// and start every episode from the zero state. Dropout masks are drawn from
/// `dropout` when given.
pub fn collect_rollouts(
    env: &mut impl Pomdp,
    actor: &Model,
    critic: &Model,
    sample_steps: usize,
    rng: &mut Rng,
    mut dropout: Option<&mut Rng>,
) -> Result<RolloutBuffer, PpoError> {
    let mut buffer = RolloutBuffer::default();
    let mut pi = Runner::new(actor, 1);
    let mut vf = Runner::new(critic, 1);
    while buffer.steps() < sample_steps {
        let index = buffer.episodes.len();
        pi.reset();
        vf.reset();
        let mut ep = Episode {
            obs: Vec::new(),
            actions: Vec::new(),
            logps: Vec::new(),
            rewards: Vec::new(),
            values: Vec::new(),
            bootstrap: 0.0,
            timeout: false,
            advantages: Vec::new(),
            returns: Vec::new(),
        };
        let mut obs = env.reset();
        loop {
            let logits = pi.step(&obs, dropout.as_deref_mut())?;
            let value = vf.step(&obs, dropout.as_deref_mut())?.get(0, 0);
            let action = sample_categorical(rng, logits.data())?;
            let logp = log_softmax(logits.data())[action];
            let step = env
                .step(action)
                .map_err(|source| PpoError::Env { episode: index, source })?;
            ep.obs.push(obs);
            ep.actions.push(action);
            ep.logps.push(logp);
            ep.rewards.push(step.reward);
            ep.values.push(value);
            if step.done {
                if step.timeout {
                    ep.timeout = true;
                    ep.bootstrap = vf.step(&step.obs, dropout.as_deref_mut())?.get(0, 0);
                }
                break;
            }
            obs = step.obs;
        }
        buffer.episodes.push(ep);
    }
    Ok(buffer)
}

/// Per-episode GAE: `δ_t = r_t + γV_{t+1} − V_t`, `A_t = δ_t + γλA_{t+1}`,
/// returns `A + V`.
pub fn compute_gae(buffer: &mut RolloutBuffer, gamma: f64, lambda: f64) -> Result<(), PpoError> {
    if buffer.episodes.is_empty() {
        return Err(PpoError::EmptyBuffer);
    }
    for ep in &mut buffer.episodes {
        let n = ep.len();
        ep.advantages = vec![0.0; n];
        let mut next_adv = 0.0;
        for t in (0..n).rev() {
            let next_value = if t + 1 < n { ep.values[t + 1] } else { ep.bootstrap };
            let delta = ep.rewards[t] + gamma * next_value - ep.values[t];
            next_adv = delta + gamma * lambda * next_adv;
            ep.advantages[t] = next_adv;
        }
        ep.returns = ep.advantages.iter().zip(&ep.values).map(|(a, v)| a + v).collect();
    }
    Ok(())
}

/// Rescales all advantages in the buffer to mean 0 and standard deviation 1.
pub fn normalize_advantages(buffer: &mut RolloutBuffer) {
    let n = buffer.steps() as f64;
    if n == 0.0 {
        return;
    }
    let all = || buffer.episodes.iter().flat_map(|e| e.advantages.iter());
    let mean = all().sum::<f64>() / n;
    let var = all().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let scale = 1.0 / (var.sqrt() + 1e-8);
    for ep in &mut buffer.episodes {
        for a in &mut ep.advantages {
            *a = (*a - mean) * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn episode(rewards: Vec<f64>, values: Vec<f64>) -> Episode {
        let n = rewards.len();
        Episode {
            obs: vec![vec![0.0]; n],
            actions: vec![0; n],
            logps: vec![0.0; n],
            rewards,
            values,
            bootstrap: 0.0,
            timeout: false,
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    #[test]
    fn gae_hand_recursion() {
        let mut buf = RolloutBuffer {
            episodes: vec![episode(vec![0.0, 1.0], vec![0.5, 0.5])],
        };
        compute_gae(&mut buf, 1.0, 1.0).unwrap();
        assert_eq!(buf.episodes[0].advantages, vec![0.5, 0.5]);
        assert_eq!(buf.episodes[0].returns, vec![1.0, 1.0]);
    }

    #[test]
    fn gae_lambda_zero_is_td_error() {
        let mut buf = RolloutBuffer {
            episodes: vec![episode(vec![0.3, -0.2, 1.0], vec![0.1, 0.4, -0.3])],
        };
        compute_gae(&mut buf, 0.9, 0.0).unwrap();
        let a = &buf.episodes[0].advantages;
        assert!((a[0] - (0.3 + 0.9 * 0.4 - 0.1)).abs() < 1e-15);
        assert!((a[1] - (-0.2 + 0.9 * -0.3 - 0.4)).abs() < 1e-15);
        assert!((a[2] - (1.0 - -0.3)).abs() < 1e-15);
    }

    #[test]
    fn gae_monte_carlo_limit() {
        let mut buf = RolloutBuffer {
            episodes: vec![episode(vec![1.0, 2.0, 3.0], vec![0.0; 3])],
        };
        compute_gae(&mut buf, 1.0, 1.0).unwrap();
        assert_eq!(buf.episodes[0].advantages, vec![6.0, 5.0, 3.0]);
    }

    #[test]
    fn timeout_bootstraps() {
        let mut ep = episode(vec![0.0], vec![0.2]);
        ep.bootstrap = 0.7;
        ep.timeout = true;
        let mut buf = RolloutBuffer { episodes: vec![ep] };
        compute_gae(&mut buf, 0.5, 1.0).unwrap();
        assert!((buf.episodes[0].advantages[0] - (0.35 - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn empty_buffer_rejected() {
        assert!(matches!(
            compute_gae(&mut RolloutBuffer::default(), 0.9, 0.9),
            Err(PpoError::EmptyBuffer)
        ));
    }

    #[test]
    fn normalization_moments() {
        let mut buf = RolloutBuffer {
            episodes: vec![
                episode(vec![1.0, 5.0, -2.0], vec![0.0; 3]),
                episode(vec![0.5, 3.0], vec![0.1, 0.0]),
            ],
        };
        compute_gae(&mut buf, 0.99, 0.95).unwrap();
        normalize_advantages(&mut buf);
        let all: Vec<f64> = buf.episodes.iter().flat_map(|e| e.advantages.clone()).collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let std = (all.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / all.len() as f64).sqrt();
        assert!(mean.abs() < 1e-10);
        assert!((std - 1.0).abs() < 1e-6);
    }
}
