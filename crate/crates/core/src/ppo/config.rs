use super::PpoError;

/// PPO hyperparameters. Minibatches are made of whole episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub pi_epochs: usize,
    pub vf_epochs: usize,
    pub pi_lr: f64,
    pub vf_lr: f64,
    /// Cosine annealing period, in iterations.
    pub lr_t_max: usize,
    pub grad_clip_norm: f64,
    pub clip_eps: f64,
    pub vf_coeff: f64,
    pub entropy_coeff: f64,
    pub gae_lambda: f64,
    pub gamma: f64,
    /// Minibatches per epoch.
    pub minibatch_count: usize,
    /// Episodes per minibatch.
    pub minibatch_size: usize,
    pub kl_max: f64,
    /// Environment steps collected per iteration (whole episodes, so possibly more).
    pub sample_steps: usize,
    pub total_iterations: usize,
    pub adam_eps: f64,
    /// Sample dropout masks while collecting rollouts, as in training mode.
    pub rollout_dropout: bool,
}

impl PpoConfig {
    pub fn tmaze() -> Self {
        Self {
            pi_epochs: 20,
            vf_epochs: 10,
            pi_lr: 0.005,
            vf_lr: 0.001,
            lr_t_max: 250,
            grad_clip_norm: 1.0,
            clip_eps: 0.2,
            vf_coeff: 1.0,
            entropy_coeff: 0.01,
            gae_lambda: 0.98,
            gamma: 0.998,
            minibatch_count: 2,
            minibatch_size: 25,
            kl_max: 0.2,
            sample_steps: 1400,
            total_iterations: 250,
            adam_eps: 1e-5,
            rollout_dropout: true,
        }
    }

    pub fn lookup() -> Self {
        Self {
            pi_epochs: 10,
            vf_epochs: 10,
            minibatch_count: 8,
            minibatch_size: 256,
            sample_steps: 250,
            ..Self::tmaze()
        }
    }

    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::BadConfig(m.to_string()));
        let positive = [
            ("pi_lr", self.pi_lr),
            ("vf_lr", self.vf_lr),
            ("grad_clip_norm", self.grad_clip_norm),
            ("vf_coeff", self.vf_coeff),
            ("kl_max", self.kl_max),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.entropy_coeff >= 0.0 && self.entropy_coeff.is_finite()) {
            return bad("entropy_coeff must be non-negative");
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad("clip_eps must lie in (0, 1)");
        }
        for (name, v) in [("gae_lambda", self.gae_lambda), ("gamma", self.gamma)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(&format!("{name} must lie in (0, 1]"));
            }
        }
        let counts = [
            ("pi_epochs", self.pi_epochs),
            ("vf_epochs", self.vf_epochs),
            ("lr_t_max", self.lr_t_max),
            ("minibatch_count", self.minibatch_count),
            ("minibatch_size", self.minibatch_size),
            ("sample_steps", self.sample_steps),
        ];
        for (name, v) in counts {
            if v == 0 {
                return bad(&format!("{name} must be positive"));
            }
        }
        Ok(())
    }
}
