//! Recurrent actor-critic policy: LSTM cell feeding an ELU head on each
//! side, trained by exact backpropagation through truncated windows.

pub mod checkpoint;
pub mod dist;
pub mod lstm;
pub mod mlp;
pub mod net;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GfError, Result};
use crate::gait::{OBS_DIM, PRIV_EXTRA};

pub use dist::ActionDistribution;
pub use net::{
    backward_window, forward_step, forward_window, NetGrads, NetParams, RecurrentState,
    WindowCache,
};

pub const INITIAL_LOG_STD: f64 = -std::f64::consts::LN_2; // ln 0.5
pub const ACTION_SCALE: f64 = 0.5;

/// Network shape. The critic input is the actor observation plus the
/// privileged tail.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Dims {
    pub obs: usize,
    pub hidden: usize,
    pub action: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            obs: OBS_DIM,
            hidden: 128,
            action: crate::sim::NJ,
        }
    }
}

impl Dims {
    pub fn privileged(&self) -> usize {
        self.obs + PRIV_EXTRA
    }

    /// Head widths are a fixed function of the recurrent width so that the
    /// checkpoint header (obs, hidden, action) fully determines the shape.
    pub fn head(&self) -> [usize; 2] {
        [self.hidden, (self.hidden / 2).max(1)]
    }
}

/// Actor-critic parameters plus the shared, state-independent log standard
/// deviation of the action distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub dims: Dims,
    pub actor: NetParams,
    pub critic: NetParams,
    pub log_std: Vec<f64>,
}

/// Gradients in the same shape as [`Policy`].
#[derive(Debug, Clone)]
pub struct PolicyGrads {
    pub actor: NetGrads,
    pub critic: NetGrads,
    pub log_std: Vec<f64>,
}

impl Policy {
    /// Zero-initialized policy of the given shape.
    pub fn with_dims(dims: Dims) -> Self {
        let actor = NetParams::zeros(dims.obs, dims.hidden, &dims.head(), dims.action);
        let critic = NetParams::zeros(dims.privileged(), dims.hidden, &dims.head(), 1);
        let log_std = vec![INITIAL_LOG_STD; dims.action];
        Policy {
            dims,
            actor,
            critic,
            log_std,
        }
    }

    /// Seeded random initialization, reproducible for a fixed seed and shape.
    pub fn init(dims: Dims, seed: u64) -> Self {
        let mut policy = Policy::with_dims(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        policy.actor.init(&mut rng);
        policy.critic.init(&mut rng);
        policy
    }

    pub fn zero_grads(&self) -> PolicyGrads {
        PolicyGrads {
            actor: self.actor.zero_grads(),
            critic: self.critic.zero_grads(),
            log_std: vec![0.0; self.log_std.len()],
        }
    }

    /// Fresh recurrent state for a batch of environments.
    pub fn initial_state(&self, batch: usize) -> (RecurrentState, RecurrentState) {
        (
            RecurrentState::zeros(self.dims.hidden, batch),
            RecurrentState::zeros(self.dims.hidden, batch),
        )
    }

    /// Distribution for one observation, advancing the actor state.
    pub fn act(&self, obs: &[f64], state: &mut RecurrentState) -> ActionDistribution {
        assert_eq!(obs.len(), self.dims.obs);
        let mean = forward_step(&self.actor, obs, state);
        ActionDistribution::new(mean.as_slice().to_vec(), &self.log_std)
    }

    /// Value estimate for one privileged observation, advancing the critic
    /// state.
    pub fn value(&self, priv_obs: &[f64], state: &mut RecurrentState) -> f64 {
        assert_eq!(priv_obs.len(), self.dims.privileged());
        forward_step(&self.critic, priv_obs, state)[0]
    }

    // flat layout: actor blocks, critic blocks, log_std
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        net::flatten_into(&self.actor, out);
        net::flatten_into(&self.critic, out);
        out.extend_from_slice(&self.log_std);
    }

    pub fn unflatten_from(&mut self, data: &[f64]) -> Result<()> {
        if data.len() != self.param_count() {
            return Err(GfError::DimensionMismatch {
                what: "policy parameter vector",
                expected: self.param_count(),
                got: data.len(),
            });
        }
        let mut cursor = 0;
        net::unflatten_from(&mut self.actor, data, &mut cursor);
        net::unflatten_from(&mut self.critic, data, &mut cursor);
        self.log_std.copy_from_slice(&data[cursor..]);
        Ok(())
    }

    pub fn grads_flatten_into(&self, grads: &PolicyGrads, out: &mut Vec<f64>) {
        net::grads_flatten_into(&grads.actor, out);
        net::grads_flatten_into(&grads.critic, out);
        out.extend_from_slice(&grads.log_std);
    }

    pub fn param_count(&self) -> usize {
        net::param_count(&self.actor) + net::param_count(&self.critic) + self.log_std.len()
    }

    /// Named block sizes in serialization order, for inspection output.
    pub fn block_layout(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        net::visit_blocks(&self.actor, |name, block| {
            out.push((format!("actor.{name}"), block.len()));
        });
        net::visit_blocks(&self.critic, |name, block| {
            out.push((format!("critic.{name}"), block.len()));
        });
        out.push(("log_std".into(), self.log_std.len()));
        out
    }
}

/// Maps a raw network output to joint position targets around a default
/// pose.
pub fn action_to_targets(action: &[f64], default_pose: &[f64; crate::sim::NJ]) -> [f64; crate::sim::NJ] {
    let mut targets = *default_pose;
    for (t, a) in targets.iter_mut().zip(action) {
        *t += ACTION_SCALE * a;
    }
    targets
}

#[cfg(test)]
mod tests;
