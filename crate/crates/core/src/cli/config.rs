use std::fmt::Display;
use std::str::FromStr;

use crate::cells::{build_architecture, ArchKind, CellChoice, CellFamily, NetworkSpec};
use crate::envs::{AnyEnv, EnvKind, LookupConfig, LookupTreeMaze, Range, TMaze, TmazeConfig, ACTION_COUNT};
use crate::numerics::Rng;
use crate::ppo::PpoConfig;

use super::CliError;

/// Every recognized key, in snapshot order.
pub const CONFIG_KEYS: &[&str] = &[
    "env",
    "cell",
    "arch",
    "seed",
    "iters",
    "checkpoint_every",
    "pi_epochs",
    "vf_epochs",
    "pi_lr",
    "vf_lr",
    "lr_t_max",
    "grad_clip_norm",
    "clip_eps",
    "vf_coeff",
    "entropy_coeff",
    "gae_lambda",
    "gamma",
    "minibatch_count",
    "minibatch_size",
    "kl_max",
    "sample_steps",
    "adam_eps",
    "rollout_dropout",
    "tmaze_length",
    "lookup_mazes",
    "lookup_length",
    "lookup_tau",
];

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        pairs.push(check_key(k.trim(), v.trim())?);
    }
    Ok(pairs)
}

/// Parses one `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Syntax {
        line: 0,
        text: s.to_string(),
    })?;
    check_key(k.trim(), v.trim())
}

fn check_key(k: &str, v: &str) -> Result<(String, String), CliError> {
    if !CONFIG_KEYS.contains(&k) {
        return Err(CliError::UnknownKey(k.to_string()));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Fully resolved training configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvKind,
    pub cell: CellChoice,
    pub arch: ArchKind,
    pub seed: u64,
    /// Also keep a numbered checkpoint every this many iterations; 0 keeps only the final one.
    pub checkpoint_every: usize,
    pub ppo: PpoConfig,
    pub tmaze_length: Range,
    pub lookup: LookupConfig,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| CliError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl RunConfig {
    /// Applies `pairs` in order over the defaults of the chosen environment;
    /// later pairs win.
    pub fn resolve(pairs: &[(String, String)]) -> Result<Self, CliError> {
        let last = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let env: EnvKind = last("env").map_or(Ok(EnvKind::Tmaze), |v| parse("env", v))?;
        let default_cell = match env {
            EnvKind::Tmaze => CellChoice::Single(CellFamily::Gru),
            EnvKind::Lookup => CellChoice::Single(CellFamily::MinGru),
        };
        let cell: CellChoice = last("cell").map_or(Ok(default_cell), |v| parse("cell", v))?;
        let arch = match last("arch") {
            Some(v) if v != "auto" => parse("arch", v)?,
            _ => match (env, cell) {
                (EnvKind::Tmaze, _) => ArchKind::TmazeSmall,
                (EnvKind::Lookup, CellChoice::Hybrid) => ArchKind::LookupHybrid,
                (EnvKind::Lookup, _) => ArchKind::LookupStandard,
            },
        };
        let seed = parse("seed", last("seed").ok_or(CliError::MissingKey("seed"))?)?;
        let mut cfg = Self {
            env,
            cell,
            arch,
            seed,
            checkpoint_every: 0,
            ppo: match env {
                EnvKind::Tmaze => PpoConfig::tmaze(),
                EnvKind::Lookup => PpoConfig::lookup(),
            },
            tmaze_length: Range { lo: 1, hi: 3 },
            lookup: LookupConfig::default(),
        };
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.ppo.validate().map_err(|e| CliError::BadValue {
            key: "ppo".into(),
            value: String::new(),
            reason: e.to_string(),
        })?;
        cfg.lookup.validate().map_err(|e| CliError::BadValue {
            key: "lookup_tau".into(),
            value: cfg.lookup.tau.to_string(),
            reason: e.to_string(),
        })?;
        cfg.specs()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        let p = &mut self.ppo;
        match key {
            "env" | "cell" | "arch" | "seed" => {}
            "iters" => p.total_iterations = parse(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "pi_epochs" => p.pi_epochs = parse(key, v)?,
            "vf_epochs" => p.vf_epochs = parse(key, v)?,
            "pi_lr" => p.pi_lr = parse(key, v)?,
            "vf_lr" => p.vf_lr = parse(key, v)?,
            "lr_t_max" => p.lr_t_max = parse(key, v)?,
            "grad_clip_norm" => p.grad_clip_norm = parse(key, v)?,
            "clip_eps" => p.clip_eps = parse(key, v)?,
            "vf_coeff" => p.vf_coeff = parse(key, v)?,
            "entropy_coeff" => p.entropy_coeff = parse(key, v)?,
            "gae_lambda" => p.gae_lambda = parse(key, v)?,
            "gamma" => p.gamma = parse(key, v)?,
            "minibatch_count" => p.minibatch_count = parse(key, v)?,
            "minibatch_size" => p.minibatch_size = parse(key, v)?,
            "kl_max" => p.kl_max = parse(key, v)?,
            "sample_steps" => p.sample_steps = parse(key, v)?,
            "adam_eps" => p.adam_eps = parse(key, v)?,
            "rollout_dropout" => p.rollout_dropout = parse(key, v)?,
            "tmaze_length" => self.tmaze_length = parse(key, v)?,
            "lookup_mazes" => self.lookup.mazes = parse(key, v)?,
            "lookup_length" => self.lookup.length = parse(key, v)?,
            "lookup_tau" => self.lookup.tau = parse(key, v)?,
            other => return Err(CliError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        let p = &self.ppo;
        match key {
            "env" => self.env.to_string(),
            "cell" => self.cell.to_string(),
            "arch" => self.arch.to_string(),
            "seed" => self.seed.to_string(),
            "iters" => p.total_iterations.to_string(),
            "checkpoint_every" => self.checkpoint_every.to_string(),
            "pi_epochs" => p.pi_epochs.to_string(),
            "vf_epochs" => p.vf_epochs.to_string(),
            "pi_lr" => p.pi_lr.to_string(),
            "vf_lr" => p.vf_lr.to_string(),
            "lr_t_max" => p.lr_t_max.to_string(),
            "grad_clip_norm" => p.grad_clip_norm.to_string(),
            "clip_eps" => p.clip_eps.to_string(),
            "vf_coeff" => p.vf_coeff.to_string(),
            "entropy_coeff" => p.entropy_coeff.to_string(),
            "gae_lambda" => p.gae_lambda.to_string(),
            "gamma" => p.gamma.to_string(),
            "minibatch_count" => p.minibatch_count.to_string(),
            "minibatch_size" => p.minibatch_size.to_string(),
            "kl_max" => p.kl_max.to_string(),
            "sample_steps" => p.sample_steps.to_string(),
            "adam_eps" => p.adam_eps.to_string(),
            "rollout_dropout" => p.rollout_dropout.to_string(),
            "tmaze_length" => self.tmaze_length.to_string(),
            "lookup_mazes" => self.lookup.mazes.to_string(),
            "lookup_length" => self.lookup.length.to_string(),
            "lookup_tau" => self.lookup.tau.to_string(),
            _ => unreachable!("snapshot covers known keys only"),
        }
    }

    /// Every key with its resolved value; parses back to the same config.
    pub fn pairs(&self) -> Vec<(String, String)> {
        CONFIG_KEYS.iter().map(|k| (k.to_string(), self.value_of(k))).collect()
    }

    pub fn to_text(&self) -> String {
        self.pairs().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn obs_width(&self) -> usize {
        match self.env {
            EnvKind::Tmaze => crate::envs::TMAZE_OBS_WIDTH,
            EnvKind::Lookup => self.lookup.obs_width(),
        }
    }

    /// Actor and critic network specs.
    pub fn specs(&self) -> Result<(NetworkSpec, NetworkSpec), CliError> {
        let w = self.obs_width();
        Ok((
            build_architecture(self.arch, self.cell, w, ACTION_COUNT)?,
            build_architecture(self.arch, self.cell, w, 1)?,
        ))
    }

    /// Training environment, seeded from its own stream of the run seed.
    pub fn make_env(&self) -> Result<AnyEnv, CliError> {
        let rng = Rng::derive(self.seed, "env");
        Ok(match self.env {
            EnvKind::Tmaze => AnyEnv::Tmaze(TMaze::with_rng(TmazeConfig::new(self.tmaze_length), rng)?),
            EnvKind::Lookup => AnyEnv::Lookup(LookupTreeMaze::with_rng(self.lookup, rng)?),
        })
    }

    pub fn run_id(&self) -> String {
        format!("{}-{}-{}-s{}", self.env, self.cell, self.regime(), self.seed)
    }

    /// Training-horizon label used to group populations.
    pub fn regime(&self) -> String {
        match self.env {
            EnvKind::Tmaze => format!("L{}", self.tmaze_length),
            EnvKind::Lookup => format!("N{}", self.lookup.mazes),
        }
    }
}
