//! Reference-free multi-gait locomotion training stack for a planar biped:
//! a deterministic rigid-body simulator, gait-conditioned observations and
//! reward routing, a multi-phase curriculum, a recurrent actor-critic with
//! hand-rolled gradients, and a PPO trainer.

// gate and foot loops index several parallel arrays; iterators obscure them
#![allow(clippy::needless_range_loop)]

pub mod curriculum;
pub mod error;
pub mod gait;
pub mod policy;
pub mod rewards;
pub mod sim;
pub mod trainer;

pub use error::{GfError, Result};
