//! The iterate loop: collect → advantage estimation → update → curriculum,
//! with stats logging and checkpointing.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curriculum::{maybe_advance, validate_phases, CurriculumState, PhaseSpec};
use crate::error::{GfError, Result};
use crate::gait::N_MODES;
use crate::policy::{checkpoint, Policy};

use super::adam::Adam;
use super::buffer::{collect_rollouts, Collector};
use super::env::Environment;
use super::gae::{compute_gae, normalize_advantages};
use super::ppo::{ppo_update, PPOConfig};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub iterations: usize,
    /// Truncated-recurrence window length, control steps.
    pub window: usize,
    /// Checkpoint every this many iterations (also at phase advances).
    pub checkpoint_interval: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            iterations: 1000,
            window: 32,
            checkpoint_interval: 100,
        }
    }
}

/// One stats row per iteration.
#[derive(Debug, Clone)]
pub struct TrainStats {
    pub iteration: usize,
    pub phase: usize,
    pub mean_return: f64,
    pub mean_episode_length: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub explained_variance: f64,
    pub grad_norm: f64,
    /// Mean routed reward attributed to steps in each gait mode.
    pub mode_reward: [f64; N_MODES],
    pub divergences: usize,
    pub aborted: bool,
}

pub const STATS_HEADER: &str = "iteration,phase,mean_return,mean_episode_length,policy_loss,value_loss,entropy,clip_fraction,explained_variance,grad_norm,reward_stand,reward_walk,reward_run,reward_walk_to_stand,reward_run_to_walk,divergences,aborted";

impl TrainStats {
    pub fn csv_row(&self) -> String {
        let m = &self.mode_reward;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.phase,
            self.mean_return,
            self.mean_episode_length,
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.clip_fraction,
            self.explained_variance,
            self.grad_norm,
            m[0], m[1], m[2], m[3], m[4],
            self.divergences,
            self.aborted as u8,
        )
    }
}

/// Artifacts of a completed run.
pub struct TrainOutcome {
    pub stats: Vec<TrainStats>,
    pub curriculum: CurriculumState,
    pub events: Vec<String>,
    pub checkpoints: Vec<PathBuf>,
}

fn explained_variance(returns: &[Vec<f64>], values: &[Vec<f64>]) -> f64 {
    let flat_r: Vec<f64> = returns.iter().flatten().copied().collect();
    let flat_v: Vec<f64> = values.iter().flatten().copied().collect();
    let n = flat_r.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mean_r = flat_r.iter().sum::<f64>() / n;
    let var_r = flat_r.iter().map(|r| (r - mean_r) * (r - mean_r)).sum::<f64>() / n;
    if var_r == 0.0 {
        return 0.0;
    }
    let var_e = flat_r
        .iter()
        .zip(&flat_v)
        .map(|(r, v)| (r - v) * (r - v))
        .sum::<f64>()
        / n;
    1.0 - var_e / var_r
}

fn write_checkpoint(policy: &Policy, dir: &Path, label: &str) -> Result<PathBuf> {
    let path = dir.join(format!("checkpoint_{label}.gfpk"));
    checkpoint::save(policy, &path)?;
    Ok(path)
}

/// Runs the full loop. Deterministic for a fixed master seed, env set, and
/// configs. Stats are appended to `<out>/stats.csv` as they are produced.
#[allow(clippy::too_many_arguments)]
pub fn train_loop(
    policy: &mut Policy,
    envs: &mut [Box<dyn Environment>],
    phases: &[PhaseSpec],
    ppo: &PPOConfig,
    trainer: &TrainerConfig,
    out_dir: &Path,
    master_seed: u64,
) -> Result<TrainOutcome> {
    ppo.validate()?;
    validate_phases(phases)?;
    std::fs::create_dir_all(out_dir)?;
    let stats_path = out_dir.join("stats.csv");
    let mut stats_file = std::fs::File::create(&stats_path)?;
    writeln!(stats_file, "{STATS_HEADER}")?;

    let mut outcome = TrainOutcome {
        stats: Vec::new(),
        curriculum: CurriculumState::new(),
        events: Vec::new(),
        checkpoints: Vec::new(),
    };
    outcome
        .checkpoints
        .push(write_checkpoint(policy, out_dir, "initial")?);

    let mut adam = Adam::new(ppo.learning_rate, policy.param_count());
    let mut collector = Collector::new(policy, envs, &phases[0], master_seed);
    let mut consecutive_aborts = 0usize;

    for iteration in 0..trainer.iterations {
        let phase_spec = &phases[outcome.curriculum.phase];
        let buffer = collect_rollouts(
            policy,
            envs,
            &mut collector,
            phase_spec,
            ppo.rollout_length,
            trainer.window,
        );
        if buffer.divergences > 0 {
            outcome.events.push(format!(
                "iteration {iteration}: {} simulator divergence(s), env force-reset",
                buffer.divergences
            ));
        }

        let (mut advantages, returns) = compute_gae(
            &buffer.rewards,
            &buffer.values,
            &buffer.dones,
            &buffer.bootstrap,
            ppo.gamma,
            ppo.lambda,
        )?;
        normalize_advantages(&mut advantages);

        let (ep_returns, ep_lengths) = collector.take_episode_stats();
        let mean_return = if ep_returns.is_empty() {
            collector.partial_mean_return()
        } else {
            ep_returns.iter().sum::<f64>() / ep_returns.len() as f64
        };
        let mean_len = if ep_lengths.is_empty() {
            buffer.t_len as f64
        } else {
            ep_lengths.iter().sum::<usize>() as f64 / ep_lengths.len() as f64
        };

        let mut mode_reward = [0.0; N_MODES];
        let mut mode_count = [0usize; N_MODES];
        for t in 0..buffer.t_len {
            for env in 0..buffer.n_envs {
                let m = buffer.modes[t][env];
                mode_reward[m] += buffer.rewards[t][env];
                mode_count[m] += 1;
            }
        }
        for (r, c) in mode_reward.iter_mut().zip(mode_count) {
            if c > 0 {
                *r /= c as f64;
            }
        }

        let ev = explained_variance(&returns, &buffer.values);
        let update = ppo_update(policy, &mut adam, &buffer, &advantages, &returns, ppo);
        let (row, abort) = match update {
            Ok(u) => (
                TrainStats {
                    iteration,
                    phase: phase_spec.index,
                    mean_return,
                    mean_episode_length: mean_len,
                    policy_loss: u.policy_loss,
                    value_loss: u.value_loss,
                    entropy: u.entropy,
                    clip_fraction: u.clip_fraction,
                    explained_variance: ev,
                    grad_norm: u.grad_norm,
                    mode_reward,
                    divergences: buffer.divergences,
                    aborted: false,
                },
                false,
            ),
            Err(GfError::NonFiniteGradient(what)) => {
                outcome
                    .events
                    .push(format!("iteration {iteration}: non-finite {what}, update skipped"));
                (
                    TrainStats {
                        iteration,
                        phase: phase_spec.index,
                        mean_return,
                        mean_episode_length: mean_len,
                        policy_loss: f64::NAN,
                        value_loss: f64::NAN,
                        entropy: f64::NAN,
                        clip_fraction: 0.0,
                        explained_variance: ev,
                        grad_norm: f64::NAN,
                        mode_reward,
                        divergences: buffer.divergences,
                        aborted: true,
                    },
                    true,
                )
            }
            Err(e) => return Err(e),
        };
        writeln!(stats_file, "{}", row.csv_row())?;
        outcome.stats.push(row);

        if abort {
            consecutive_aborts += 1;
            if consecutive_aborts >= 3 {
                outcome
                    .events
                    .push("3 consecutive aborted updates, stopping".into());
                break;
            }
        } else {
            consecutive_aborts = 0;
        }

        let before = outcome.curriculum.phase;
        outcome.curriculum = maybe_advance(&outcome.curriculum, phases, mean_return);
        if outcome.curriculum.phase != before {
            outcome.events.push(format!(
                "iteration {iteration}: advanced to curriculum phase {}",
                phases[outcome.curriculum.phase].index
            ));
            outcome.checkpoints.push(write_checkpoint(
                policy,
                out_dir,
                &format!("phase{}", phases[outcome.curriculum.phase].index),
            )?);
        }
        if trainer.checkpoint_interval > 0 && (iteration + 1) % trainer.checkpoint_interval == 0 {
            outcome.checkpoints.push(write_checkpoint(
                policy,
                out_dir,
                &format!("{:06}", iteration + 1),
            )?);
        }
    }

    if trainer.iterations > 0 {
        outcome
            .checkpoints
            .push(write_checkpoint(policy, out_dir, "final")?);
    }
    stats_file.flush()?;
    Ok(outcome)
}
