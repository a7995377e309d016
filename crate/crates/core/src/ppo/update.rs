use std::collections::HashMap;

use crate::cells::Model;
use crate::numerics::{log_softmax, softmax, NodeId, NumericsError, Rng, Tape, Tensor2};

use super::optim::{clip_grad_norm, cosine_lr, Adam};
use super::rollout::{Episode, RolloutBuffer};
use super::{PpoConfig, PpoError};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateStats {
    pub pi_loss: f64,
    pub vf_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
    pub pi_steps: usize,
    pub early_stop: bool,
    pub lr_pi: f64,
    pub lr_vf: f64,
}

/// Records the network over a batch of episodes, padded to the longest one,
/// and evaluates it. Returns the tape and the output node of every step.
pub(crate) fn unroll(
    model: &Model,
    episodes: &[&Episode],
    mut dropout: Option<&mut Rng>,
) -> Result<(Tape, Vec<NodeId>), NumericsError> {
    let rows = episodes.len();
    let steps = episodes.iter().map(|e| e.len()).max().unwrap_or(0);
    let width = model.spec().input;
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape);
    let mut state: Vec<NodeId> = model
        .zero_state(rows)
        .layers
        .into_iter()
        .map(|t| tape.constant(t))
        .collect();
    let mut outputs = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut x = Tensor2::zeros(rows, width);
        for (r, ep) in episodes.iter().enumerate() {
            if let Some(o) = ep.obs.get(t) {
                x.row_mut(r).copy_from_slice(o);
            }
        }
        let x = tape.constant(x);
        let y = bound.step(&mut tape, x, &mut state, rows, dropout.as_deref_mut())?;
        outputs.push(y);
    }
    let params: HashMap<String, &Tensor2> = model.named_params().into_iter().collect();
    tape.forward_with(|name| params.get(name).copied())?;
    Ok((tape, outputs))
}

fn gradients(model: &Model, tape: &Tape, seeds: Vec<(NodeId, Tensor2)>) -> Result<Vec<Tensor2>, NumericsError> {
    let grads = tape.backward_many(seeds)?;
    Ok(model
        .named_params()
        .into_iter()
        .map(|(name, p)| {
            grads
                .get(&name)
                .cloned()
                .unwrap_or_else(|| Tensor2::zeros(p.rows(), p.cols()))
        })
        .collect())
}

/// Splits shuffled episode indices into minibatches: `count` batches of `size`
/// episodes when the buffer is large enough, else `count` near-equal parts.
pub(crate) fn minibatches(n: usize, count: usize, size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut idx);
    if n >= count * size {
        return idx.chunks(size).take(count).map(<[usize]>::to_vec).collect();
    }
    let parts = count.min(n).max(1);
    (0..parts)
        .map(|k| idx[k * n / parts..(k + 1) * n / parts].to_vec())
        .collect()
}

pub(crate) struct PolicyLoss {
    pub loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
    pub seeds: Vec<(NodeId, Tensor2)>,
}

/// Clipped surrogate minus the entropy bonus, averaged over all steps of the
/// minibatch, with its gradient with respect to each step's logits.
pub(crate) fn policy_loss(
    tape: &Tape,
    outputs: &[NodeId],
    episodes: &[&Episode],
    clip_eps: f64,
    entropy_coeff: f64,
) -> PolicyLoss {
    let n = episodes.iter().map(|e| e.len()).sum::<usize>() as f64;
    let (mut loss, mut entropy, mut kl, mut clipped) = (0.0, 0.0, 0.0, 0.0);
    let mut seeds = Vec::with_capacity(outputs.len());
    for (t, &node) in outputs.iter().enumerate() {
        let logits = tape.value(node).expect("forwarded");
        let mut seed = Tensor2::zeros(logits.rows(), logits.cols());
        for (r, ep) in episodes.iter().enumerate() {
            if t >= ep.len() {
                continue;
            }
            let lp = log_softmax(logits.row(r));
            let p = softmax(logits.row(r));
            let a = ep.actions[t];
            let adv = ep.advantages[t];
            let ratio = (lp[a] - ep.logps[t]).exp();
            let clipped_ratio = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
            let unclipped = ratio * adv;
            let surrogate = unclipped.min(clipped_ratio * adv);
            let h: f64 = -p.iter().zip(&lp).map(|(p, l)| p * l).sum::<f64>();
            loss += -surrogate - entropy_coeff * h;
            entropy += h;
            kl += ep.logps[t] - lp[a];
            let active = unclipped <= clipped_ratio * adv;
            if (ratio - 1.0).abs() > clip_eps {
                clipped += 1.0;
            }
            let d_logp = if active { -ratio * adv } else { 0.0 };
            let row = seed.row_mut(r);
            for k in 0..row.len() {
                let onehot = if k == a { 1.0 } else { 0.0 };
                row[k] = (d_logp * (onehot - p[k]) + entropy_coeff * p[k] * (lp[k] + h)) / n;
            }
        }
        seeds.push((node, seed));
    }
    PolicyLoss {
        loss: loss / n,
        entropy: entropy / n,
        approx_kl: kl / n,
        clip_frac: clipped / n,
        seeds,
    }
}

/// `c1 · mean((V − R)²)` and its gradient with respect to each step's value.
pub(crate) fn value_loss(
    tape: &Tape,
    outputs: &[NodeId],
    episodes: &[&Episode],
    vf_coeff: f64,
) -> (f64, Vec<(NodeId, Tensor2)>) {
    let n = episodes.iter().map(|e| e.len()).sum::<usize>() as f64;
    let mut loss = 0.0;
    let mut seeds = Vec::with_capacity(outputs.len());
    for (t, &node) in outputs.iter().enumerate() {
        let v = tape.value(node).expect("forwarded");
        let mut seed = Tensor2::zeros(v.rows(), 1);
        for (r, ep) in episodes.iter().enumerate() {
            if t >= ep.len() {
                continue;
            }
            let err = v.get(r, 0) - ep.returns[t];
            loss += vf_coeff * err * err;
            seed.set(r, 0, 2.0 * vf_coeff * err / n);
        }
        seeds.push((node, seed));
    }
    (loss / n, seeds)
}

fn non_finite(iteration: usize) -> impl Fn(NumericsError) -> PpoError {
    move |e| match e {
        NumericsError::NonFinite { .. } => PpoError::NonFiniteLoss { iteration },
        other => PpoError::Numerics(other),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    actor: &mut Model,
    critic: &mut Model,
    actor_opt: &mut Adam,
    critic_opt: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    iteration: usize,
    minibatch_rng: &mut Rng,
    dropout_rng: &mut Rng,
) -> Result<UpdateStats, PpoError> {
    if buffer.episodes.is_empty() {
        return Err(PpoError::EmptyBuffer);
    }
    let lr_pi = cosine_lr(cfg.pi_lr, iteration, cfg.lr_t_max);
    let lr_vf = cosine_lr(cfg.vf_lr, iteration, cfg.lr_t_max);
    let mut stats = UpdateStats {
        lr_pi,
        lr_vf,
        ..UpdateStats::default()
    };
    let train_dropout = actor.spec().has_dropout();
    let n = buffer.episodes.len();
    let (mut pi_batches, mut pi_loss_sum, mut ent_sum, mut clip_sum) = (0usize, 0.0, 0.0, 0.0);
    'epochs: for _ in 0..cfg.pi_epochs {
        for batch in minibatches(n, cfg.minibatch_count, cfg.minibatch_size, minibatch_rng) {
            let eps: Vec<&Episode> = batch.iter().map(|&i| &buffer.episodes[i]).collect();
            let drop = train_dropout.then_some(&mut *dropout_rng);
            let (tape, outs) = unroll(actor, &eps, drop).map_err(non_finite(iteration))?;
            let pl = policy_loss(&tape, &outs, &eps, cfg.clip_eps, cfg.entropy_coeff);
            if !pl.loss.is_finite() {
                return Err(PpoError::NonFiniteLoss { iteration });
            }
            stats.approx_kl = pl.approx_kl;
            if pl.approx_kl > cfg.kl_max {
                stats.early_stop = true;
                break 'epochs;
            }
            pi_batches += 1;
            pi_loss_sum += pl.loss;
            ent_sum += pl.entropy;
            clip_sum += pl.clip_frac;
            let mut grads = gradients(actor, &tape, pl.seeds).map_err(non_finite(iteration))?;
            clip_grad_norm(&mut grads, cfg.grad_clip_norm);
            actor_opt.step(actor.params_mut(), &grads, lr_pi);
            actor.project();
            stats.pi_steps += 1;
        }
    }
    if pi_batches > 0 {
        stats.pi_loss = pi_loss_sum / pi_batches as f64;
        stats.entropy = ent_sum / pi_batches as f64;
        stats.clip_frac = clip_sum / pi_batches as f64;
    }
    let critic_dropout = critic.spec().has_dropout();
    let (mut vf_batches, mut vf_sum) = (0usize, 0.0);
    for _ in 0..cfg.vf_epochs {
        for batch in minibatches(n, cfg.minibatch_count, cfg.minibatch_size, minibatch_rng) {
            let eps: Vec<&Episode> = batch.iter().map(|&i| &buffer.episodes[i]).collect();
            let drop = critic_dropout.then_some(&mut *dropout_rng);
            let (tape, outs) = unroll(critic, &eps, drop).map_err(non_finite(iteration))?;
            let (loss, seeds) = value_loss(&tape, &outs, &eps, cfg.vf_coeff);
            if !loss.is_finite() {
                return Err(PpoError::NonFiniteLoss { iteration });
            }
            vf_batches += 1;
            vf_sum += loss;
            let mut grads = gradients(critic, &tape, seeds).map_err(non_finite(iteration))?;
            clip_grad_norm(&mut grads, cfg.grad_clip_norm);
            critic_opt.step(critic.params_mut(), &grads, lr_vf);
            critic.project();
        }
    }
    if vf_batches > 0 {
        stats.vf_loss = vf_sum / vf_batches as f64;
    }
    Ok(stats)
}
