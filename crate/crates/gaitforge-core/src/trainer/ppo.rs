//! Clipped-surrogate policy optimization over recurrence-window
//! minibatches with exact replayed gradients.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GfError, Result};
use crate::policy::{net, ActionDistribution, Policy, RecurrentState};

use super::adam::{clip_global_norm, Adam};
use super::buffer::RolloutBuffer;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PPOConfig {
    /// Discount γ.
    pub gamma: f64,
    /// Advantage-estimation λ.
    pub lambda: f64,
    /// Clip ratio ε.
    pub clip: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub max_grad_norm: f64,
    /// Rollout length T, control steps.
    pub rollout_length: usize,
    /// Parallel env count N.
    pub env_count: usize,
}

impl Default for PPOConfig {
    fn default() -> Self {
        PPOConfig {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            learning_rate: 3e-4,
            epochs: 4,
            minibatches: 4,
            value_coeff: 0.5,
            entropy_coeff: 0.005,
            max_grad_norm: 1.0,
            rollout_length: 512,
            env_count: 64,
        }
    }
}

impl PPOConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.gamma) {
            return Err(GfError::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !in_unit(self.lambda) {
            return Err(GfError::Config(format!("lambda must lie in (0, 1], got {}", self.lambda)));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(GfError::Config(format!("clip must lie in (0, 1), got {}", self.clip)));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(GfError::Config("learning_rate must be positive".into()));
        }
        for (name, v) in [
            ("minibatches", self.minibatches),
            ("rollout_length", self.rollout_length),
            ("env_count", self.env_count),
        ] {
            if v == 0 {
                return Err(GfError::Config(format!("{name} must be positive")));
            }
        }
        if self.value_coeff < 0.0 || self.entropy_coeff < 0.0 || self.max_grad_norm <= 0.0 {
            return Err(GfError::Config(
                "value_coeff/entropy_coeff must be non-negative, max_grad_norm positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-update diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Per-sample gradient of the clipped surrogate objective w.r.t. the
/// importance ratio: −A while the unclipped branch attains the min, exactly
/// zero once the clip binds adversely.
pub fn surrogate_grad_wrt_ratio(ratio: f64, adv: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    if ratio * adv <= clipped * adv {
        -adv
    } else {
        0.0
    }
}

fn column_resets(buffer: &RolloutBuffer, t: usize, cols: &[usize]) -> Vec<bool> {
    cols.iter().map(|&c| buffer.resets[t][c]).collect()
}

fn column_obs(rows: usize, obs: &[Vec<f64>], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols.len(), |r, k| obs[cols[k]][r])
}

fn snapshot_columns(snap: &RecurrentState, cols: &[usize]) -> RecurrentState {
    let h = DMatrix::from_fn(snap.h.nrows(), cols.len(), |r, k| snap.h[(r, cols[k])]);
    let c = DMatrix::from_fn(snap.c.nrows(), cols.len(), |r, k| snap.c[(r, cols[k])]);
    RecurrentState { h, c }
}

/// One PPO update over the buffer: for each epoch and env-column minibatch,
/// replays every recurrence window from its stored boundary snapshot,
/// accumulates exact gradients of the clipped surrogate plus value and
/// entropy terms, clips the global norm, and applies an adaptive-moment
/// step. A non-finite loss or gradient aborts with the parameters restored.
pub fn ppo_update(
    policy: &mut Policy,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    advantages: &[Vec<f64>],
    returns: &[Vec<f64>],
    config: &PPOConfig,
) -> Result<UpdateStats> {
    config.validate()?;
    let backup = policy.clone();
    let n = buffer.n_envs;
    let window = buffer.window;
    let mut stats = UpdateStats::default();
    let mut stat_samples = 0usize;

    // fixed env-column chunks keep the update deterministic
    let chunk = n.div_ceil(config.minibatches);
    let col_groups: Vec<Vec<usize>> = (0..n)
        .collect::<Vec<_>>()
        .chunks(chunk.max(1))
        .map(|c| c.to_vec())
        .collect();

    for epoch in 0..config.epochs {
        for cols in &col_groups {
            let mut grads = policy.zero_grads();
            let count = (buffer.t_len * cols.len()) as f64;
            let mut mb_policy_loss = 0.0;
            let mut mb_value_loss = 0.0;
            let mut mb_entropy = 0.0;
            let mut mb_clipped = 0usize;

            for w in 0..buffer.window_count() {
                let t0 = w * window;
                let t1 = (t0 + window).min(buffer.t_len);
                let xs: Vec<DMatrix<f64>> = (t0..t1)
                    .map(|t| column_obs(policy.dims.obs, &buffer.obs[t], cols))
                    .collect();
                let priv_xs: Vec<DMatrix<f64>> = (t0..t1)
                    .map(|t| column_obs(policy.dims.privileged(), &buffer.priv_obs[t], cols))
                    .collect();
                let resets: Vec<Vec<bool>> =
                    (t0..t1).map(|t| column_resets(buffer, t, cols)).collect();
                let actor_init = snapshot_columns(&buffer.actor_snapshots[w], cols);
                let critic_init = snapshot_columns(&buffer.critic_snapshots[w], cols);

                let actor_cache = net::forward_window(&policy.actor, &xs, &resets, &actor_init);
                let critic_cache = net::forward_window(&policy.critic, &priv_xs, &resets, &critic_init);

                let mut d_actor = Vec::with_capacity(xs.len());
                let mut d_critic = Vec::with_capacity(xs.len());
                for (local_t, t) in (t0..t1).enumerate() {
                    let means = &actor_cache.outputs[local_t];
                    let vals = &critic_cache.outputs[local_t];
                    let mut dm = DMatrix::zeros(policy.dims.action, cols.len());
                    let mut dv = DMatrix::zeros(1, cols.len());
                    for (k, &c) in cols.iter().enumerate() {
                        let dist = ActionDistribution::new(
                            means.column(k).as_slice().to_vec(),
                            &policy.log_std,
                        );
                        let action = &buffer.actions[t][c];
                        let lp_new = dist.log_prob(action);
                        let lp_old = buffer.log_probs[t][c];
                        let ratio = (lp_new - lp_old).exp();
                        let adv = advantages[t][c];
                        let clipped = ratio < 1.0 - config.clip || ratio > 1.0 + config.clip;
                        if clipped {
                            mb_clipped += 1;
                        }
                        let surr = (ratio * adv).min(ratio.clamp(1.0 - config.clip, 1.0 + config.clip) * adv);
                        mb_policy_loss -= surr / count;
                        let active = surrogate_grad_wrt_ratio(ratio, adv, config.clip) != 0.0
                            || adv == 0.0;
                        if active {
                            let d_lp = -adv * ratio / count;
                            let dmean = dist.dlogp_dmean(action);
                            let dls = dist.dlogp_dlogstd(action);
                            for j in 0..policy.dims.action {
                                dm[(j, k)] += d_lp * dmean[j];
                                grads.log_std[j] += d_lp * dls[j];
                            }
                        }
                        // entropy bonus moves only the log-std
                        for j in 0..policy.dims.action {
                            grads.log_std[j] -= config.entropy_coeff / count;
                        }
                        mb_entropy += dist.entropy() / count;

                        let v = vals[(0, k)];
                        let err = v - returns[t][c];
                        mb_value_loss += config.value_coeff * err * err / count;
                        dv[(0, k)] = 2.0 * config.value_coeff * err / count;
                    }
                    d_actor.push(dm);
                    d_critic.push(dv);
                }
                let ag = net::backward_window(&policy.actor, &actor_cache, &d_actor);
                let cg = net::backward_window(&policy.critic, &critic_cache, &d_critic);
                accumulate(&mut grads.actor, ag);
                accumulate(&mut grads.critic, cg);
            }

            let mut flat_grads = Vec::with_capacity(policy.param_count());
            policy.grads_flatten_into(&grads, &mut flat_grads);
            let loss = mb_policy_loss + mb_value_loss - config.entropy_coeff * mb_entropy;
            if !loss.is_finite() || flat_grads.iter().any(|g| !g.is_finite()) {
                *policy = backup;
                return Err(GfError::NonFiniteGradient("ppo update"));
            }
            stats.grad_norm = clip_global_norm(&mut flat_grads, config.max_grad_norm);

            let mut flat = Vec::with_capacity(policy.param_count());
            policy.flatten_into(&mut flat);
            adam.step(&mut flat, &flat_grads);
            policy.unflatten_from(&flat)?;

            if epoch == 0 {
                stats.policy_loss += mb_policy_loss;
                stats.value_loss += mb_value_loss;
                stats.entropy += mb_entropy * count;
                stats.clip_fraction += mb_clipped as f64;
                stat_samples += buffer.t_len * cols.len();
            }
        }
    }
    if stat_samples > 0 {
        stats.entropy /= stat_samples as f64;
        stats.clip_fraction /= stat_samples as f64;
    }
    Ok(stats)
}

fn accumulate(acc: &mut crate::policy::NetGrads, add: crate::policy::NetGrads) {
    for k in 0..acc.lstm.w.len() {
        acc.lstm.w[k] += &add.lstm.w[k];
        acc.lstm.u[k] += &add.lstm.u[k];
        acc.lstm.b[k] += &add.lstm.b[k];
    }
    for (a, b) in acc.head.layers.iter_mut().zip(add.head.layers) {
        a.0 += b.0;
        a.1 += b.1;
    }
}
