//! Rollout collection, advantage estimation, clipped-surrogate policy
//! optimization, and the training/evaluation drivers.

pub mod adam;
pub mod buffer;
pub mod env;
pub mod eval;
pub mod gae;
pub mod ppo;
pub mod run;

pub use adam::{clip_global_norm, Adam};
pub use buffer::{collect_rollouts, derive_seed, Collector, RolloutBuffer};
pub use env::{BipedEnv, Environment, StepOutcome, ToyEnv, CONTROL_DT, DECIMATION, SIM_DT};
pub use eval::{evaluate, EvalRow, EvalTrace, Schedule};
pub use gae::{compute_gae, normalize_advantages};
pub use ppo::{ppo_update, surrogate_grad_wrt_ratio, PPOConfig, UpdateStats};
pub use run::{train_loop, TrainOutcome, TrainStats, TrainerConfig, STATS_HEADER};
