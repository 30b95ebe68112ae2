//! Time-major rollout storage and parallel collection.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curriculum::PhaseSpec;
use crate::policy::{ActionDistribution, Policy, RecurrentState};
use crate::policy::lstm::lstm_step;
use crate::policy::net::NetParams;

use super::env::Environment;

/// Everything collected over (T steps × N envs), time-major.
pub struct RolloutBuffer {
    pub t_len: usize,
    pub n_envs: usize,
    /// Recurrence-window length used for snapshots and updates.
    pub window: usize,
    pub obs: Vec<Vec<Vec<f64>>>,
    pub priv_obs: Vec<Vec<Vec<f64>>>,
    pub actions: Vec<Vec<Vec<f64>>>,
    pub log_probs: Vec<Vec<f64>>,
    pub rewards: Vec<Vec<f64>>,
    /// Raw per-term diagnostics, registry order.
    pub term_values: Vec<Vec<Vec<f64>>>,
    pub values: Vec<Vec<f64>>,
    pub dones: Vec<Vec<bool>>,
    /// Column reset flags applied before step t (done at t−1 or rollout
    /// start after a terminal).
    pub resets: Vec<Vec<bool>>,
    pub modes: Vec<Vec<usize>>,
    /// Recurrent states at each window start, actor and critic.
    pub actor_snapshots: Vec<RecurrentState>,
    pub critic_snapshots: Vec<RecurrentState>,
    /// Critic value of the post-rollout state per env.
    pub bootstrap: Vec<f64>,
    /// Simulator divergences observed during collection.
    pub divergences: usize,
}

impl RolloutBuffer {
    pub fn window_count(&self) -> usize {
        self.t_len.div_ceil(self.window)
    }

    pub fn mean_reward(&self) -> f64 {
        let count = (self.t_len * self.n_envs).max(1);
        self.rewards.iter().flatten().sum::<f64>() / count as f64
    }
}

/// Carried per-env collection state between rollouts.
pub struct Collector {
    pub actor_state: RecurrentState,
    pub critic_state: RecurrentState,
    pub last_obs: Vec<Vec<f64>>,
    pub last_priv: Vec<Vec<f64>>,
    pub pending_reset: Vec<bool>,
    action_rngs: Vec<ChaCha8Rng>,
    /// Per-env return/length accumulators and completed-episode records.
    returns_acc: Vec<f64>,
    lengths_acc: Vec<usize>,
    pub completed_returns: Vec<f64>,
    pub completed_lengths: Vec<usize>,
}

/// Fixed arithmetic from the master seed; envs and action streams get
/// disjoint, reproducible seeds.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        ^ stream.wrapping_mul(0xA076_1D64_78BD_642F)
        ^ index.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Collector {
    pub fn new(
        policy: &Policy,
        envs: &mut [Box<dyn Environment>],
        phase: &PhaseSpec,
        master_seed: u64,
    ) -> Self {
        let n = envs.len();
        let (actor_state, critic_state) = policy.initial_state(n);
        let mut last_obs = Vec::with_capacity(n);
        let mut last_priv = Vec::with_capacity(n);
        for env in envs.iter_mut() {
            let (o, p) = env.reset(phase);
            last_obs.push(o);
            last_priv.push(p);
        }
        let action_rngs = (0..n)
            .map(|i| ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 1, i as u64)))
            .collect();
        Collector {
            actor_state,
            critic_state,
            last_obs,
            last_priv,
            pending_reset: vec![false; n],
            action_rngs,
            returns_acc: vec![0.0; n],
            lengths_acc: vec![0; n],
            completed_returns: Vec::new(),
            completed_lengths: Vec::new(),
        }
    }

    /// Drains episode statistics recorded since the last call.
    pub fn take_episode_stats(&mut self) -> (Vec<f64>, Vec<usize>) {
        (
            std::mem::take(&mut self.completed_returns),
            std::mem::take(&mut self.completed_lengths),
        )
    }

    /// Mean return of episodes still in progress.
    pub fn partial_mean_return(&self) -> f64 {
        self.returns_acc.iter().sum::<f64>() / self.returns_acc.len().max(1) as f64
    }
}

/// Batch one-step forward through a network, applying per-column resets and
/// committing the new recurrent state.
fn batch_step(net: &NetParams, xs: &DMatrix<f64>, state: &mut RecurrentState, resets: &[bool]) -> DMatrix<f64> {
    let step = lstm_step(&net.lstm, xs, &state.h, &state.c, resets);
    state.h = step.h();
    state.c = step.c.clone();
    net.head.forward(&state.h).output
}

fn obs_matrix(rows: usize, obs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = obs.len();
    DMatrix::from_fn(rows, n, |r, c| obs[c][r])
}

/// Steps every env for `t_len` control steps, recording everything the
/// update needs. Env stepping is parallel; results merge in env-index
/// order, so the buffer is independent of thread interleaving.
pub fn collect_rollouts(
    policy: &Policy,
    envs: &mut [Box<dyn Environment>],
    collector: &mut Collector,
    phase: &PhaseSpec,
    t_len: usize,
    window: usize,
) -> RolloutBuffer {
    let n = envs.len();
    let mut buffer = RolloutBuffer {
        t_len,
        n_envs: n,
        window,
        obs: Vec::with_capacity(t_len),
        priv_obs: Vec::with_capacity(t_len),
        actions: Vec::with_capacity(t_len),
        log_probs: Vec::with_capacity(t_len),
        rewards: Vec::with_capacity(t_len),
        term_values: Vec::with_capacity(t_len),
        values: Vec::with_capacity(t_len),
        dones: Vec::with_capacity(t_len),
        resets: Vec::with_capacity(t_len),
        modes: Vec::with_capacity(t_len),
        actor_snapshots: Vec::new(),
        critic_snapshots: Vec::new(),
        bootstrap: Vec::new(),
        divergences: 0,
    };

    for t in 0..t_len {
        let resets = collector.pending_reset.clone();
        if t % window == 0 {
            // snapshot AFTER masking so window replay starts identically
            let mut a = collector.actor_state.clone();
            let mut c = collector.critic_state.clone();
            for (col, reset) in resets.iter().enumerate() {
                if *reset {
                    a.h.column_mut(col).fill(0.0);
                    a.c.column_mut(col).fill(0.0);
                    c.h.column_mut(col).fill(0.0);
                    c.c.column_mut(col).fill(0.0);
                }
            }
            buffer.actor_snapshots.push(a);
            buffer.critic_snapshots.push(c);
        }

        let obs_m = obs_matrix(policy.dims.obs, &collector.last_obs);
        let priv_m = obs_matrix(policy.dims.privileged(), &collector.last_priv);
        let means = batch_step(&policy.actor, &obs_m, &mut collector.actor_state, &resets);
        let values_m = batch_step(&policy.critic, &priv_m, &mut collector.critic_state, &resets);

        let mut actions = Vec::with_capacity(n);
        let mut log_probs = Vec::with_capacity(n);
        for i in 0..n {
            let dist = ActionDistribution::new(means.column(i).as_slice().to_vec(), &policy.log_std);
            let a = dist.sample(&mut collector.action_rngs[i]);
            log_probs.push(dist.log_prob(&a));
            actions.push(a);
        }

        let outcomes: Vec<_> = envs
            .par_iter_mut()
            .zip(actions.par_iter())
            .map(|(env, action)| env.step(action, phase))
            .collect();

        buffer.obs.push(std::mem::take(&mut collector.last_obs));
        buffer.priv_obs.push(std::mem::take(&mut collector.last_priv));
        buffer.actions.push(actions);
        buffer.log_probs.push(log_probs);
        buffer.values.push(values_m.row(0).iter().copied().collect());
        buffer.resets.push(resets);

        let mut rewards = Vec::with_capacity(n);
        let mut dones = Vec::with_capacity(n);
        let mut terms = Vec::with_capacity(n);
        let mut modes = Vec::with_capacity(n);
        for (i, out) in outcomes.into_iter().enumerate() {
            collector.returns_acc[i] += out.reward;
            collector.lengths_acc[i] += 1;
            if out.done {
                collector
                    .completed_returns
                    .push(std::mem::take(&mut collector.returns_acc[i]));
                collector
                    .completed_lengths
                    .push(std::mem::take(&mut collector.lengths_acc[i]));
            }
            if out.diverged {
                buffer.divergences += 1;
            }
            rewards.push(out.reward);
            dones.push(out.done);
            terms.push(out.terms);
            modes.push(out.mode);
            collector.pending_reset[i] = out.done;
            collector.last_obs.push(out.obs);
            collector.last_priv.push(out.priv_obs);
        }
        buffer.rewards.push(rewards);
        buffer.dones.push(dones);
        buffer.term_values.push(terms);
        buffer.modes.push(modes);
    }

    // bootstrap values for the post-rollout states (peek, do not commit)
    let priv_m = obs_matrix(policy.dims.privileged(), &collector.last_priv);
    let mut peek = collector.critic_state.clone();
    let values_m = batch_step(&policy.critic, &priv_m, &mut peek, &collector.pending_reset);
    buffer.bootstrap = values_m.row(0).iter().copied().collect();

    buffer
}
