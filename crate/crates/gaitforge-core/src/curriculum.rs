//! Three-phase training scheduler: expanding gait sets, widening command
//! ranges, and deterministic per-phase command sampling.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use crate::gait::{GaitCommand, GaitMode};

/// How a phase decides it is finished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromotionRule {
    /// Advance once the trailing-window mean return clears a threshold.
    ReturnGated { threshold: f64, window: usize },
    /// Advance purely on iteration count.
    FixedIterations,
}

/// One curriculum phase: which gaits are active, what commands are sampled,
/// which coordination mechanisms are on, and when to advance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    /// 1-based phase index.
    pub index: usize,
    pub gaits: Vec<GaitMode>,
    /// Commanded-velocity range [v_min, v_max], m/s.
    pub command_range: [f64; 2],
    /// Reward routing across the newly added modes.
    pub reward_routing: bool,
    /// Transition reward blending.
    pub transition_blending: bool,
    /// Deceleration smoothing terms.
    pub decel_smoothing: bool,
    pub promotion: PromotionRule,
    /// Floor on iterations spent in this phase before advancing.
    pub min_iterations: usize,
    /// Probability mass pinned to v_cmd = 0 when Stand is active.
    pub zero_command_prob: f64,
    /// Seconds between command setpoint resamples.
    pub resample_interval: f64,
    /// Command ramp slope between setpoints, m/s².
    pub ramp_rate: f64,
}

impl PhaseSpec {
    pub fn contains_stand(&self) -> bool {
        self.gaits.contains(&GaitMode::Stand)
    }
}

/// The standard three phases: low-speed walking, standing and walk-to-stand,
/// then running up to 4 m/s with all five modes.
pub fn default_phases() -> Vec<PhaseSpec> {
    use GaitMode::*;
    let base = |index, gaits: &[GaitMode], range: [f64; 2]| PhaseSpec {
        index,
        gaits: gaits.to_vec(),
        command_range: range,
        reward_routing: true,
        transition_blending: index >= 2,
        decel_smoothing: index >= 2,
        promotion: PromotionRule::ReturnGated {
            threshold: 400.0,
            window: 50,
        },
        min_iterations: 200,
        zero_command_prob: 0.2,
        resample_interval: 5.0,
        ramp_rate: 1.0,
    };
    vec![
        base(1, &[Walk], [0.3, 2.0]),
        base(2, &[Walk, Stand, WalkToStand], [0.0, 2.0]),
        base(3, &[Walk, Stand, Run, WalkToStand, RunToWalk], [0.0, 4.0]),
    ]
}

/// Validates the monotone-growth invariants across a phase list.
pub fn validate_phases(phases: &[PhaseSpec]) -> crate::Result<()> {
    for pair in phases.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.index <= a.index {
            return Err(crate::GfError::Config(
                "phase indices must be strictly increasing".into(),
            ));
        }
        if b.command_range[0] > a.command_range[0] || b.command_range[1] < a.command_range[1] {
            return Err(crate::GfError::Config(
                "command ranges must be non-shrinking across phases".into(),
            ));
        }
        if !a.gaits.iter().all(|g| b.gaits.contains(g)) {
            return Err(crate::GfError::Config(
                "gait sets must be non-shrinking across phases".into(),
            ));
        }
    }
    for p in phases {
        if p.command_range[0] > p.command_range[1] {
            return Err(crate::GfError::Config("empty command range".into()));
        }
    }
    Ok(())
}

/// One command setpoint: uniform over the phase range, with the configured
/// probability mass pinned to zero in phases that train standing.
pub fn sample_setpoint(phase: &PhaseSpec, rng: &mut impl Rng) -> GaitCommand {
    if phase.contains_stand() && rng.gen_range(0.0..1.0) < phase.zero_command_prob {
        return GaitCommand { v_cmd: 0.0 };
    }
    let [lo, hi] = phase.command_range;
    let v_cmd = if lo == hi { lo } else { rng.gen_range(lo..hi) };
    GaitCommand { v_cmd }
}

/// Seeded convenience wrapper over [`sample_setpoint`].
pub fn sample_command(phase: &PhaseSpec, rng_seed: u64) -> GaitCommand {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_setpoint(phase, &mut rng)
}

/// Streaming command signal: setpoints resampled on the phase's interval,
/// connected by constant-slope ramps. Pure function of (phase, seed).
#[derive(Debug, Clone)]
pub struct CommandGenerator {
    rng: ChaCha8Rng,
    value: f64,
    setpoint: f64,
    until_resample: f64,
}

impl CommandGenerator {
    pub fn new(phase: &PhaseSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = sample_setpoint(phase, &mut rng).v_cmd;
        CommandGenerator {
            rng,
            value: first,
            setpoint: first,
            until_resample: phase.resample_interval,
        }
    }

    pub fn current(&self) -> GaitCommand {
        GaitCommand { v_cmd: self.value }
    }

    /// Advances the signal by `dt` seconds and returns the new command.
    pub fn step(&mut self, phase: &PhaseSpec, dt: f64) -> GaitCommand {
        self.until_resample -= dt;
        if self.until_resample <= 0.0 {
            self.setpoint = sample_setpoint(phase, &mut self.rng).v_cmd;
            self.until_resample += phase.resample_interval;
        }
        let max_step = phase.ramp_rate * dt;
        let delta = (self.setpoint - self.value).clamp(-max_step, max_step);
        self.value += delta;
        self.current()
    }
}

/// Mutable curriculum progress; the phase index never regresses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    /// 0-based index into the phase list.
    pub phase: usize,
    pub iterations_in_phase: usize,
    returns: Vec<f64>,
}

impl CurriculumState {
    pub fn new() -> Self {
        CurriculumState {
            phase: 0,
            iterations_in_phase: 0,
            returns: Vec::new(),
        }
    }

    pub fn trailing_mean(&self) -> Option<f64> {
        if self.returns.is_empty() {
            None
        } else {
            Some(self.returns.iter().sum::<f64>() / self.returns.len() as f64)
        }
    }
}

impl Default for CurriculumState {
    fn default() -> Self {
        Self::new()
    }
}

/// Records one iteration's mean return and advances the phase when the
/// active promotion rule and the iteration floor are both met. Never
/// advances past the final phase.
pub fn maybe_advance(
    state: &CurriculumState,
    phases: &[PhaseSpec],
    latest_mean_return: f64,
) -> CurriculumState {
    let mut next = state.clone();
    next.iterations_in_phase += 1;
    let spec = &phases[state.phase];
    let window = match spec.promotion {
        PromotionRule::ReturnGated { window, .. } => window,
        PromotionRule::FixedIterations => 1,
    };
    next.returns.push(latest_mean_return);
    if next.returns.len() > window {
        let drop = next.returns.len() - window;
        next.returns.drain(..drop);
    }
    if state.phase + 1 >= phases.len() {
        return next;
    }
    if next.iterations_in_phase < spec.min_iterations {
        return next;
    }
    let promote = match spec.promotion {
        PromotionRule::FixedIterations => true,
        PromotionRule::ReturnGated { threshold, window } => {
            next.returns.len() >= window.min(next.iterations_in_phase)
                && next.trailing_mean().is_some_and(|m| m >= threshold)
        }
    };
    if promote {
        next.phase += 1;
        next.iterations_in_phase = 0;
        next.returns.clear();
    }
    next
}
