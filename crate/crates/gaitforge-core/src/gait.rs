//! Gait-mode classification, the cyclic phase clock, and actor/critic
//! observation construction.
//!
//! The frozen actor observation layout (offset, width, field) is:
//!
//! | offset | width | field                                    |
//! |--------|-------|------------------------------------------|
//! | 0      | 1     | base angular velocity, rad/s             |
//! | 1      | 2     | projected gravity, body frame            |
//! | 3      | 1     | commanded forward velocity, m/s          |
//! | 4      | 6     | joint offsets from the default pose, rad |
//! | 10     | 6     | joint velocities, rad/s                  |
//! | 16     | 6     | previous action, rad                     |
//! | 22     | 2     | phase encoding (sin φ, cos φ)            |
//! | 24     | 5     | one-hot gait ID                          |
//!
//! The critic observation appends, in order: per-foot contact flags (2),
//! per-foot GRF (4), friction coefficient (1), contact damping (1), hip/knee
//! body-contact flags (4), disturbance force (2), application point (2).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{body_point_heights, ModelSpec, SimState, NJ};

/// Actor observation width.
pub const OBS_DIM: usize = 29;
/// Privileged fields appended for the critic.
pub const PRIV_EXTRA: usize = 16;
/// Critic observation width.
pub const PRIV_OBS_DIM: usize = OBS_DIM + PRIV_EXTRA;
/// Number of gait modes / one-hot width.
pub const N_MODES: usize = 5;

pub const OBS_ANG_VEL: usize = 0;
pub const OBS_GRAVITY: usize = 1;
pub const OBS_CMD: usize = 3;
pub const OBS_JOINT_POS: usize = 4;
pub const OBS_JOINT_VEL: usize = 10;
pub const OBS_PREV_ACTION: usize = 16;
pub const OBS_PHASE: usize = 22;
pub const OBS_GAIT_ID: usize = 24;

/// Discrete locomotion regimes; the index order is frozen (it defines the
/// one-hot layout and the gait-mask rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GaitMode {
    Stand,
    Walk,
    Run,
    WalkToStand,
    RunToWalk,
}

impl GaitMode {
    pub const ALL: [GaitMode; N_MODES] = [
        GaitMode::Stand,
        GaitMode::Walk,
        GaitMode::Run,
        GaitMode::WalkToStand,
        GaitMode::RunToWalk,
    ];

    pub fn index(self) -> usize {
        match self {
            GaitMode::Stand => 0,
            GaitMode::Walk => 1,
            GaitMode::Run => 2,
            GaitMode::WalkToStand => 3,
            GaitMode::RunToWalk => 4,
        }
    }

    pub fn from_index(i: usize) -> crate::Result<GaitMode> {
        GaitMode::ALL
            .get(i)
            .copied()
            .ok_or(crate::GfError::UnknownMode(i))
    }

    pub fn is_transition(self) -> bool {
        matches!(self, GaitMode::WalkToStand | GaitMode::RunToWalk)
    }

    /// For a transition mode, the (source, target) steady modes.
    pub fn endpoints(self) -> Option<(GaitMode, GaitMode)> {
        match self {
            GaitMode::WalkToStand => Some((GaitMode::Walk, GaitMode::Stand)),
            GaitMode::RunToWalk => Some((GaitMode::Run, GaitMode::Walk)),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GaitMode::Stand => "stand",
            GaitMode::Walk => "walk",
            GaitMode::Run => "run",
            GaitMode::WalkToStand => "walk_to_stand",
            GaitMode::RunToWalk => "run_to_walk",
        }
    }
}

/// One-hot encoding at the mode's frozen index.
pub fn encode_gait_id(mode: GaitMode) -> [f64; N_MODES] {
    let mut one_hot = [0.0; N_MODES];
    one_hot[mode.index()] = 1.0;
    one_hot
}

/// Commanded forward velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitCommand {
    pub v_cmd: f64,
}

/// Classifier thresholds and the per-mode stepping frequencies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GaitParams {
    /// |v_cmd| below this commands standing, m/s.
    pub stand_threshold: f64,
    /// |v_cmd| at or above this commands running, m/s.
    pub run_threshold: f64,
    /// Extra margin required to switch to a faster regime, m/s.
    pub hysteresis: f64,
    /// Speed tolerance around the target band for settling out of a
    /// transition, m/s.
    pub settle_tolerance: f64,
    /// Time the settle condition must hold, s.
    pub settle_time: f64,
    /// Stepping frequency while walking, Hz.
    pub walk_frequency: f64,
    /// Stepping frequency while running, Hz.
    pub run_frequency: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            stand_threshold: 0.1,
            run_threshold: 2.0,
            hysteresis: 0.1,
            settle_tolerance: 0.15,
            settle_time: 0.3,
            walk_frequency: 1.5,
            run_frequency: 2.5,
        }
    }
}

impl GaitParams {
    /// Stepping frequency per mode; transitions keep their source gait's
    /// cadence and standing freezes the clock.
    pub fn frequency(&self, mode: GaitMode) -> f64 {
        match mode {
            GaitMode::Stand => 0.0,
            GaitMode::Walk | GaitMode::WalkToStand => self.walk_frequency,
            GaitMode::Run | GaitMode::RunToWalk => self.run_frequency,
        }
    }

    fn regime_of(&self, mode: GaitMode) -> usize {
        match mode {
            GaitMode::Stand | GaitMode::WalkToStand => 0,
            GaitMode::Walk | GaitMode::RunToWalk => 1,
            GaitMode::Run => 2,
        }
    }

    /// Steady regime commanded by `v_cmd`, with one-sided hysteresis:
    /// moving to a faster regime needs the threshold plus the hysteresis
    /// margin, moving to a slower one just the threshold.
    fn target_regime(&self, v_cmd: f64, current: usize) -> usize {
        let v = v_cmd.abs();
        let up1 = self.stand_threshold + self.hysteresis;
        let up2 = self.run_threshold + self.hysteresis;
        match current {
            0 => {
                if v >= up2 {
                    2
                } else if v >= up1 {
                    1
                } else {
                    0
                }
            }
            1 => {
                if v >= up2 {
                    2
                } else if v < self.stand_threshold {
                    0
                } else {
                    1
                }
            }
            _ => {
                if v < self.stand_threshold {
                    0
                } else if v < self.run_threshold {
                    1
                } else {
                    2
                }
            }
        }
    }

    fn steady_mode(regime: usize) -> GaitMode {
        match regime {
            0 => GaitMode::Stand,
            1 => GaitMode::Walk,
            _ => GaitMode::Run,
        }
    }

    /// Distance from |v| to the regime's speed band, m/s.
    fn band_distance(&self, regime: usize, speed: f64) -> f64 {
        let v = speed.abs();
        let (lo, hi) = match regime {
            0 => (0.0, self.stand_threshold),
            1 => (self.stand_threshold, self.run_threshold),
            _ => (self.run_threshold, f64::INFINITY),
        };
        if v < lo {
            lo - v
        } else if v > hi {
            v - hi
        } else {
            0.0
        }
    }
}

/// Steady mode for a command speed, ignoring hysteresis. Used to seed the
/// classifier at episode start.
pub fn initial_mode(v_cmd: f64, params: &GaitParams) -> GaitMode {
    let v = v_cmd.abs();
    if v < params.stand_threshold {
        GaitMode::Stand
    } else if v < params.run_threshold {
        GaitMode::Walk
    } else {
        GaitMode::Run
    }
}

/// Single-step gait classification from command and previous mode.
///
/// Decelerating regime changes enter the corresponding transition mode
/// (Walk→Stand via WalkToStand, Run→Walk via RunToWalk); accelerating
/// changes switch directly. Settling out of a transition is time-based and
/// handled by [`GaitClassifier`].
pub fn classify_gait(
    v_cmd: f64,
    _state: &SimState,
    prev_mode: GaitMode,
    params: &GaitParams,
) -> GaitMode {
    let current = params.regime_of(prev_mode);
    let target = params.target_regime(v_cmd, current);
    if let Some((source, _)) = prev_mode.endpoints() {
        // an accelerating command aborts the transition
        if target >= params.regime_of(source) {
            return GaitParams::steady_mode(target);
        }
        return prev_mode;
    }
    let prev_regime = params.regime_of(prev_mode);
    if target == prev_regime {
        prev_mode
    } else if target > prev_regime {
        GaitParams::steady_mode(target)
    } else {
        match prev_mode {
            GaitMode::Walk => GaitMode::WalkToStand,
            // a Run slowdown always passes through RunToWalk first
            GaitMode::Run => GaitMode::RunToWalk,
            _ => GaitParams::steady_mode(target),
        }
    }
}

/// Stateful classifier: wraps [`classify_gait`] and tracks the settling
/// timer that lets a transition exit into its target mode once the actual
/// base speed stays near the target band.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitClassifier {
    pub mode: GaitMode,
    settle: f64,
    params: GaitParams,
}

impl GaitClassifier {
    pub fn new(params: GaitParams) -> Self {
        GaitClassifier {
            mode: GaitMode::Stand,
            settle: 0.0,
            params,
        }
    }

    pub fn params(&self) -> &GaitParams {
        &self.params
    }

    pub fn reset(&mut self, mode: GaitMode) {
        self.mode = mode;
        self.settle = 0.0;
    }

    pub fn step(&mut self, v_cmd: f64, state: &SimState, dt: f64) -> GaitMode {
        let next = classify_gait(v_cmd, state, self.mode, &self.params);
        if next != self.mode {
            self.settle = 0.0;
        }
        self.mode = next;
        if let Some((_, target)) = self.mode.endpoints() {
            let dist = self
                .params
                .band_distance(self.params.regime_of(target), state.qd[0]);
            if dist <= self.params.settle_tolerance {
                self.settle += dt;
                if self.settle >= self.params.settle_time {
                    self.mode = target;
                    self.settle = 0.0;
                }
            } else {
                self.settle = 0.0;
            }
        }
        self.mode
    }
}

/// Cyclic gait phase with per-mode stepping frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseClock {
    /// φ ∈ [0, 2π).
    pub phase: f64,
    pub params: GaitParams,
}

impl PhaseClock {
    pub fn new(params: GaitParams) -> Self {
        PhaseClock { phase: 0.0, params }
    }
}

/// φ ← (φ + 2π·f(mode)·dt) mod 2π. Standing freezes the phase.
pub fn advance_phase(clock: &PhaseClock, mode: GaitMode, dt: f64) -> PhaseClock {
    assert!(dt > 0.0);
    let two_pi = std::f64::consts::TAU;
    let f = clock.params.frequency(mode);
    let mut phase = (clock.phase + two_pi * f * dt) % two_pi;
    if phase < 0.0 {
        phase += two_pi;
    }
    PhaseClock {
        phase,
        params: clock.params,
    }
}

/// Actor-visible proprioceptive observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

/// Critic observation: the actor block followed by privileged fields.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivilegedObservation(pub [f64; PRIV_OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl PrivilegedObservation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Gravity direction (0, −1) rotated into the base frame.
pub fn projected_gravity(pitch: f64) -> [f64; 2] {
    let (s, c) = pitch.sin_cos();
    [-s, -c]
}

/// Packs the actor observation in the frozen layout. Noise-free.
pub fn build_actor_obs(
    state: &SimState,
    cmd: GaitCommand,
    clock: &PhaseClock,
    mode: GaitMode,
    prev_action: &[f64; NJ],
    spec: &ModelSpec,
) -> Observation {
    let mut o = [0.0; OBS_DIM];
    o[OBS_ANG_VEL] = state.pitch_rate();
    let g = projected_gravity(state.pitch());
    o[OBS_GRAVITY] = g[0];
    o[OBS_GRAVITY + 1] = g[1];
    o[OBS_CMD] = cmd.v_cmd;
    let q = state.joint_angles();
    let qd = state.joint_rates();
    for i in 0..NJ {
        o[OBS_JOINT_POS + i] = q[i] - spec.default_pose[i];
        o[OBS_JOINT_VEL + i] = qd[i];
        o[OBS_PREV_ACTION + i] = prev_action[i];
    }
    o[OBS_PHASE] = clock.phase.sin();
    o[OBS_PHASE + 1] = clock.phase.cos();
    let one_hot = encode_gait_id(mode);
    o[OBS_GAIT_ID..OBS_GAIT_ID + N_MODES].copy_from_slice(&one_hot);
    Observation(o)
}

/// Per-field noise scale for the proprioceptive blocks; command, previous
/// action, phase encoding and gait ID are never noised.
fn noise_scale(index: usize) -> f64 {
    match index {
        OBS_ANG_VEL => 2.0,
        i if (OBS_GRAVITY..OBS_CMD).contains(&i) => 1.0,
        i if (OBS_JOINT_POS..OBS_JOINT_VEL).contains(&i) => 1.0,
        i if (OBS_JOINT_VEL..OBS_PREV_ACTION).contains(&i) => 10.0,
        _ => 0.0,
    }
}

/// Adds uniform noise of ±`fraction`·scale per proprioceptive field.
pub fn apply_obs_noise(obs: &mut Observation, fraction: f64, rng: &mut impl Rng) {
    if fraction == 0.0 {
        return;
    }
    for i in 0..OBS_DIM {
        let amp = fraction * noise_scale(i);
        if amp > 0.0 {
            obs.0[i] += rng.gen_range(-amp..amp);
        }
    }
}

/// Packs the critic observation: the noise-free actor block followed by
/// privileged ground-truth simulator fields.
pub fn build_critic_obs(
    state: &SimState,
    cmd: GaitCommand,
    clock: &PhaseClock,
    mode: GaitMode,
    prev_action: &[f64; NJ],
    spec: &ModelSpec,
) -> PrivilegedObservation {
    let actor = build_actor_obs(state, cmd, clock, mode, prev_action, spec);
    let mut o = [0.0; PRIV_OBS_DIM];
    o[..OBS_DIM].copy_from_slice(&actor.0);
    let mut k = OBS_DIM;
    for c in &state.contacts {
        o[k] = f64::from(c.in_contact);
        k += 1;
    }
    for c in &state.contacts {
        o[k] = c.grf.x;
        o[k + 1] = c.grf.y;
        k += 2;
    }
    o[k] = spec.friction;
    o[k + 1] = spec.contact_damping;
    k += 2;
    let [lk, rk, hip] = body_point_heights(state, spec);
    o[k] = f64::from(hip <= 0.0);
    o[k + 1] = f64::from(lk <= 0.0);
    o[k + 2] = f64::from(hip <= 0.0);
    o[k + 3] = f64::from(rk <= 0.0);
    k += 4;
    o[k] = state.disturbance_force.x;
    o[k + 1] = state.disturbance_force.y;
    o[k + 2] = state.disturbance_point.x;
    o[k + 3] = state.disturbance_point.y;
    PrivilegedObservation(o)
}
