use super::net::{d_entropy, d_log_prob, Adam, PolicyInput, PolicyNet, NUM_ACTIONS};
use crate::error::RlError;
use crate::rng::Rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub lr: f64,
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub epochs: usize,
    /// Steps per rollout fragment.
    pub fragment_len: usize,
    /// Fragments collected per update.
    pub fragments_per_update: usize,
    /// Fragments per minibatch.
    pub minibatch_fragments: usize,
    /// Global gradient-norm clip; 0 disables.
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            entropy_coef: 0.01,
            value_coef: 0.5,
            epochs: 4,
            fragment_len: 128,
            fragments_per_update: 4,
            minibatch_fragments: 2,
            max_grad_norm: 0.5,
            normalize_advantages: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub input: PolicyInput,
    /// Recurrent state fed into this step.
    pub h_prev: Vec<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    /// The episode ended with this step.
    pub done: bool,
}

/// Consecutive transitions plus the value estimate of the state after the
/// last one (ignored when that step ended the episode).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub steps: Vec<Transition>,
    pub bootstrap_value: f64,
}

/// Generalized advantage estimates and value targets.
pub fn gae(rollout: &Rollout, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rollout.steps.len();
    let mut adv = vec![0.0; n];
    let mut next_value = rollout.bootstrap_value;
    let mut acc = 0.0;
    for i in (0..n).rev() {
        let t = &rollout.steps[i];
        let nonterminal = if t.done { 0.0 } else { 1.0 };
        let delta = t.reward + gamma * next_value * nonterminal - t.value;
        acc = delta + gamma * lambda * nonterminal * acc;
        adv[i] = acc;
        next_value = t.value;
    }
    let returns = adv.iter().zip(&rollout.steps).map(|(a, t)| a + t.value).collect();
    (adv, returns)
}

/// PPO objective term for one sample (to be maximized).
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Largest `|ratio - 1|` on the first minibatch, before any update.
    pub initial_ratio_deviation: f64,
    pub minibatch_updates: usize,
}

pub fn ppo_update(
    net: &mut PolicyNet,
    opt: &mut Adam,
    rollouts: &[Rollout],
    cfg: &PpoConfig,
    rng: &mut Rng,
) -> Result<PpoStats, RlError> {
    if rollouts.iter().all(|r| r.steps.is_empty()) {
        return Err(RlError::EmptyRollouts);
    }
    let mut advantages: Vec<Vec<f64>> = Vec::with_capacity(rollouts.len());
    let mut returns: Vec<Vec<f64>> = Vec::with_capacity(rollouts.len());
    for r in rollouts {
        let (a, ret) = gae(r, cfg.gamma, cfg.gae_lambda);
        advantages.push(a);
        returns.push(ret);
    }
    if cfg.normalize_advantages {
        let all: Vec<f64> = advantages.iter().flatten().copied().collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let var = all.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / all.len() as f64;
        let std = var.sqrt();
        if std > 1e-8 {
            advantages.iter_mut().flatten().for_each(|a| *a = (*a - mean) / std);
        } else {
            advantages.iter_mut().flatten().for_each(|a| *a -= mean);
        }
    }

    let mut stats = PpoStats::default();
    let mut samples = 0usize;
    let mut clipped = 0usize;
    let mut order: Vec<usize> = (0..rollouts.len()).collect();
    let mb = cfg.minibatch_fragments.max(1);
    let mut grad = vec![0.0; net.num_params()];
    let mut first = true;
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for (mi, chunk) in order.chunks(mb).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let count: usize = chunk.iter().map(|&i| rollouts[i].steps.len()).sum();
            if count == 0 {
                continue;
            }
            let scale = 1.0 / count as f64;
            let mut mb_loss = 0.0;
            for &ri in chunk {
                for (ti, t) in rollouts[ri].steps.iter().enumerate() {
                    let fwd = net.forward(&t.input, &t.h_prev)?;
                    let a = advantages[ri][ti];
                    let ret = returns[ri][ti];
                    let ratio = (fwd.log_prob(t.action) - t.log_prob).exp();
                    if first {
                        stats.initial_ratio_deviation = stats.initial_ratio_deviation.max((ratio - 1.0).abs());
                    }
                    let surrogate = clipped_surrogate(ratio, a, cfg.clip);
                    let active = !((a >= 0.0 && ratio > 1.0 + cfg.clip) || (a < 0.0 && ratio < 1.0 - cfg.clip));
                    if !active {
                        clipped += 1;
                    }
                    let entropy = fwd.entropy();
                    let v_err = fwd.value - ret;
                    let loss = -surrogate + cfg.value_coef * v_err * v_err - cfg.entropy_coef * entropy;
                    if !loss.is_finite() {
                        return Err(RlError::NanLoss {
                            epoch,
                            minibatch: mi,
                            detail: format!("ratio {ratio}, advantage {a}, value {}, return {ret}", fwd.value),
                        });
                    }
                    mb_loss += loss;
                    stats.policy_loss -= surrogate;
                    stats.value_loss += v_err * v_err;
                    stats.entropy += entropy;
                    samples += 1;

                    let mut d_logits = vec![0.0; NUM_ACTIONS];
                    if active && a != 0.0 {
                        let coef = -a * ratio * scale;
                        for (d, g) in d_logits.iter_mut().zip(d_log_prob(&fwd, t.action)) {
                            *d += coef * g;
                        }
                    }
                    if cfg.entropy_coef != 0.0 {
                        for (d, g) in d_logits.iter_mut().zip(d_entropy(&fwd)) {
                            *d -= cfg.entropy_coef * scale * g;
                        }
                    }
                    let d_value = 2.0 * cfg.value_coef * v_err * scale;
                    net.backward(&t.input, &fwd, &d_logits, d_value, &mut grad);
                }
            }
            first = false;
            if !mb_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(RlError::NanLoss {
                    epoch,
                    minibatch: mi,
                    detail: "non-finite gradient".into(),
                });
            }
            if cfg.max_grad_norm > 0.0 {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > cfg.max_grad_norm {
                    let f = cfg.max_grad_norm / norm;
                    grad.iter_mut().for_each(|g| *g *= f);
                }
            }
            opt.step(&mut net.params, &grad);
            stats.minibatch_updates += 1;
        }
    }
    if samples > 0 {
        let n = samples as f64;
        stats.policy_loss /= n;
        stats.value_loss /= n;
        stats.entropy /= n;
        stats.clip_fraction = clipped as f64 / n;
    }
    Ok(stats)
}
