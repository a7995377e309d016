use crate::cells::{Model, NetworkSpec};
use crate::envs::AnyEnv;
use crate::numerics::Rng;

use super::optim::Adam;
use super::rollout::{collect_rollouts, compute_gae, normalize_advantages};
use super::update::ppo_update;
use super::{PpoConfig, PpoError};

/// One row of the metric history.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub mean_reward: f64,
    pub episodes: usize,
    pub steps: usize,
    pub pi_loss: f64,
    pub vf_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub early_stop: bool,
    pub lr_pi: f64,
    pub lr_vf: f64,
}

pub const METRICS_HEADER: &str = "iteration,mean_reward,pi_loss,vf_loss,entropy,approx_kl,lr_pi,lr_vf";

impl IterationMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.iteration,
            self.mean_reward,
            self.pi_loss,
            self.vf_loss,
            self.entropy,
            self.approx_kl,
            self.lr_pi,
            self.lr_vf
        )
    }
}

/// Random streams owned by a training run, each derived from the run seed.
#[derive(Debug, Clone)]
pub struct TrainerRngs {
    pub rollout: Rng,
    pub minibatch: Rng,
    pub dropout: Rng,
}

/// Actor, critic, their optimizers and the run's random streams. The
/// environment is owned separately so its draws stay independent.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: PpoConfig,
    pub actor: Model,
    pub critic: Model,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub rngs: TrainerRngs,
    pub iteration: usize,
}

impl Trainer {
    pub fn new(cfg: PpoConfig, actor_spec: NetworkSpec, critic_spec: NetworkSpec, seed: u64) -> Result<Self, PpoError> {
        cfg.validate()?;
        if actor_spec.input != critic_spec.input {
            return Err(PpoError::BadConfig(format!(
                "actor input {} and critic input {} differ",
                actor_spec.input, critic_spec.input
            )));
        }
        if critic_spec.output_width() != 1 {
            return Err(PpoError::BadConfig("critic must have one output".into()));
        }
        let actor = Model::init(actor_spec, &mut Rng::derive(seed, "init.actor"))?;
        let critic = Model::init(critic_spec, &mut Rng::derive(seed, "init.critic"))?;
        let actor_opt = Adam::new(actor.named_params().into_iter().map(|(_, t)| t), cfg.adam_eps);
        let critic_opt = Adam::new(critic.named_params().into_iter().map(|(_, t)| t), cfg.adam_eps);
        Ok(Self {
            cfg,
            actor,
            critic,
            actor_opt,
            critic_opt,
            rngs: TrainerRngs {
                rollout: Rng::derive(seed, "rollout"),
                minibatch: Rng::derive(seed, "minibatch"),
                dropout: Rng::derive(seed, "dropout"),
            },
            iteration: 0,
        })
    }

    pub fn finished(&self) -> bool {
        self.iteration >= self.cfg.total_iterations
    }

    /// Collect, estimate advantages, update; advances the iteration counter.
    pub fn iterate(&mut self, env: &mut AnyEnv) -> Result<IterationMetrics, PpoError> {
        let iteration = self.iteration;
        let dropout = (self.cfg.rollout_dropout
            && (self.actor.spec().has_dropout() || self.critic.spec().has_dropout()))
        .then_some(&mut self.rngs.dropout);
        let mut buffer = collect_rollouts(
            env,
            &self.actor,
            &self.critic,
            self.cfg.sample_steps,
            &mut self.rngs.rollout,
            dropout,
        )?;
        compute_gae(&mut buffer, self.cfg.gamma, self.cfg.gae_lambda)?;
        normalize_advantages(&mut buffer);
        let stats = ppo_update(
            &mut self.actor,
            &mut self.critic,
            &mut self.actor_opt,
            &mut self.critic_opt,
            &buffer,
            &self.cfg,
            iteration,
            &mut self.rngs.minibatch,
            &mut self.rngs.dropout,
        )?;
        self.iteration += 1;
        Ok(IterationMetrics {
            iteration,
            mean_reward: buffer.mean_reward(),
            episodes: buffer.episodes.len(),
            steps: buffer.steps(),
            pi_loss: stats.pi_loss,
            vf_loss: stats.vf_loss,
            entropy: stats.entropy,
            approx_kl: stats.approx_kl,
            early_stop: stats.early_stop,
            lr_pi: stats.lr_pi,
            lr_vf: stats.lr_vf,
        })
    }

    /// Runs the remaining iterations, handing each metric row to `on_iteration`.
    pub fn run<E>(
        &mut self,
        env: &mut AnyEnv,
        mut on_iteration: impl FnMut(&Self, &IterationMetrics) -> Result<(), E>,
    ) -> Result<Vec<IterationMetrics>, E>
    where
        E: From<PpoError>,
    {
        let mut history = Vec::new();
        while !self.finished() {
            let m = self.iterate(env)?;
            on_iteration(self, &m)?;
            history.push(m);
        }
        Ok(history)
    }
}
