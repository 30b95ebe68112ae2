//! Reward terms, the gait mask, and routing of the reward vector into the
//! scalar learning signal.
//!
//! Terms are either shared across all modes or tagged to specific gait
//! modes; a per-mode mask routes only the relevant subset. Transition modes
//! blend their endpoints' terms at half weight and carry their own terms at
//! full weight.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{GfError, Result};
use crate::gait::{GaitMode, PhaseClock};
use crate::sim::{SegmentMomenta, SimState, NJ};

/// Arm-asymmetry coefficient inside the momentum reward.
pub const MOMENTUM_ARM_COEFF: f64 = 0.4;

/// Shaping constants shared by the reward terms. All configurable; the
/// defaults are echoed into the resolved run config.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RewardShaping {
    /// Tracking kernel width σ, m/s.
    pub tracking_sigma: f64,
    /// Peak swing-foot clearance target, m.
    pub clearance_peak: f64,
    /// Forward-velocity coefficient in the push-off reward.
    pub pushoff_forward: f64,
    /// Vertical-velocity coefficient in the push-off reward.
    pub pushoff_vertical: f64,
    /// Stance phase progress after which push-off is rewarded.
    pub pushoff_window: f64,
    /// Stance duration threshold for the short-contact penalty, s.
    pub short_contact_threshold: f64,
    /// Slope of the short-contact penalty, 1/s.
    pub short_contact_slope: f64,
    /// Acceleration bound in the smooth-deceleration penalty, m/s².
    pub decel_limit: f64,
    /// Double-support overlap of the walking schedule, rad of phase.
    pub walk_double_support: f64,
    /// Per-foot stance window width of the running schedule, rad of phase.
    pub run_stance_width: f64,
    /// Joint-velocity weight inside the base-stability penalty.
    pub stability_joint_weight: f64,
    /// Torque regulation coefficient.
    pub torque_coeff: f64,
    /// Action-rate regulation coefficient.
    pub action_rate_coeff: f64,
}

impl Default for RewardShaping {
    fn default() -> Self {
        RewardShaping {
            tracking_sigma: 0.25,
            clearance_peak: 0.08,
            pushoff_forward: 0.5,
            pushoff_vertical: 1.0,
            pushoff_window: 0.8,
            short_contact_threshold: 0.25,
            short_contact_slope: 5.0,
            decel_limit: 2.0,
            walk_double_support: 0.2 * std::f64::consts::PI,
            run_stance_width: 0.7 * std::f64::consts::PI,
            stability_joint_weight: 0.1,
            torque_coeff: 1e-4,
            action_rate_coeff: 0.01,
        }
    }
}

/// R = −L_total² − 0.4·(L_la − L_ra)², on out-of-plane axis components.
pub fn momentum_reward(l_total_axis: f64, l_la_axis: f64, l_ra_axis: f64) -> f64 {
    let arm_diff = l_la_axis - l_ra_axis;
    -(l_total_axis * l_total_axis) - MOMENTUM_ARM_COEFF * arm_diff * arm_diff
}

/// Expected per-foot contact flags [left, right] for a mode at phase φ.
///
/// Walking: left stance on [0, π+Δ), right on [π, 2π)∪[0, Δ) with
/// double-support overlap Δ. Running: disjoint stance windows of the
/// configured width starting at 0 (left) and π (right), flight elsewhere.
/// Standing: both feet down. Transitions reuse their source gait's schedule.
pub fn expected_contacts(phase: f64, mode: GaitMode, shaping: &RewardShaping) -> [bool; 2] {
    let pi = std::f64::consts::PI;
    match mode {
        GaitMode::Stand => [true, true],
        GaitMode::Walk | GaitMode::WalkToStand => {
            let delta = shaping.walk_double_support;
            let left = phase < pi + delta;
            let right = phase >= pi || phase < delta;
            [left, right]
        }
        GaitMode::Run | GaitMode::RunToWalk => {
            let w = shaping.run_stance_width;
            let left = phase < w;
            let right = (pi..pi + w).contains(&phase);
            [left, right]
        }
    }
}

/// Fraction of feet matching the mode's expected contact schedule.
pub fn contact_pattern_reward(
    contacts: [bool; 2],
    clock: &PhaseClock,
    mode: GaitMode,
    shaping: &RewardShaping,
) -> f64 {
    let expected = expected_contacts(clock.phase, mode, shaping);
    let matching = contacts
        .iter()
        .zip(&expected)
        .filter(|(a, e)| a == e)
        .count();
    matching as f64 / 2.0
}

/// Swing progress in [0, 1] for a foot, or None while it is in stance.
pub fn swing_progress(
    phase: f64,
    foot: usize,
    mode: GaitMode,
    shaping: &RewardShaping,
) -> Option<f64> {
    let tau = std::f64::consts::TAU;
    let pi = std::f64::consts::PI;
    let (start, width) = match mode {
        GaitMode::Stand => return None,
        GaitMode::Walk | GaitMode::WalkToStand => {
            let delta = shaping.walk_double_support;
            if foot == 0 {
                (pi + delta, pi - delta)
            } else {
                (delta, pi - delta)
            }
        }
        GaitMode::Run | GaitMode::RunToWalk => {
            let w = shaping.run_stance_width;
            if foot == 0 {
                (w, tau - w)
            } else {
                (pi + w, tau - w)
            }
        }
    };
    let rel = (phase - start).rem_euclid(tau);
    (rel < width).then_some(rel / width)
}

/// Stance progress in [0, 1] for a foot, or None while it is in swing.
pub fn stance_progress(
    phase: f64,
    foot: usize,
    mode: GaitMode,
    shaping: &RewardShaping,
) -> Option<f64> {
    let tau = std::f64::consts::TAU;
    let pi = std::f64::consts::PI;
    let (start, width) = match mode {
        GaitMode::Stand => return Some(0.0),
        GaitMode::Walk | GaitMode::WalkToStand => {
            let delta = shaping.walk_double_support;
            if foot == 0 {
                (0.0, pi + delta)
            } else {
                (pi, pi + delta)
            }
        }
        GaitMode::Run | GaitMode::RunToWalk => {
            let w = shaping.run_stance_width;
            if foot == 0 {
                (0.0, w)
            } else {
                (pi, w)
            }
        }
    };
    let rel = (phase - start).rem_euclid(tau);
    (rel < width).then_some(rel / width)
}

/// One-sided quadratic shortfall against a half-sine clearance target.
pub fn foot_clearance_reward(
    swing_foot_height: f64,
    swing_phase_progress: f64,
    shaping: &RewardShaping,
) -> f64 {
    let target = shaping.clearance_peak * (std::f64::consts::PI * swing_phase_progress).sin();
    let shortfall = (swing_foot_height - target).min(0.0);
    -(shortfall * shortfall)
}

/// −Σ knee² over stance legs; knee convention: 0 = extended.
pub fn straight_knee_reward(knee_angles: [f64; 2], stance_flags: [bool; 2]) -> f64 {
    let mut sum = 0.0;
    for (angle, stance) in knee_angles.iter().zip(&stance_flags) {
        if *stance {
            sum -= angle * angle;
        }
    }
    sum
}

/// Rectified forward/vertical base velocity inside the late-stance window.
pub fn pushoff_reward(
    base_velocity: Vector2<f64>,
    stance_phase_progress: f64,
    shaping: &RewardShaping,
) -> f64 {
    if stance_phase_progress <= shaping.pushoff_window {
        return 0.0;
    }
    base_velocity.x.max(0.0) * shaping.pushoff_forward
        + base_velocity.y.max(0.0) * shaping.pushoff_vertical
}

/// Linear penalty on stance time beyond the threshold.
pub fn short_contact_reward(stance_duration: f64, shaping: &RewardShaping) -> f64 {
    -(stance_duration - shaping.short_contact_threshold).max(0.0) * shaping.short_contact_slope
}

/// −(‖v‖² + ω² + c·‖q̇‖²).
pub fn base_stability_reward(
    base_lin_vel: Vector2<f64>,
    base_ang_vel: f64,
    joint_vels: &[f64; NJ],
    shaping: &RewardShaping,
) -> f64 {
    let joints: f64 = joint_vels.iter().map(|v| v * v).sum();
    -(base_lin_vel.norm_squared()
        + base_ang_vel * base_ang_vel
        + shaping.stability_joint_weight * joints)
}

/// Quadratic penalty on |accel| beyond the deceleration bound; transition
/// modes only.
pub fn smooth_decel_reward(accel: f64, mode: GaitMode, shaping: &RewardShaping) -> f64 {
    if !mode.is_transition() {
        return 0.0;
    }
    let overage = (accel.abs() - shaping.decel_limit).max(0.0);
    -(overage * overage)
}

/// exp(−(v − v_cmd)²/σ²).
pub fn tracking_reward(v_actual: f64, v_cmd: f64, shaping: &RewardShaping) -> f64 {
    let err = v_actual - v_cmd;
    (-(err * err) / (shaping.tracking_sigma * shaping.tracking_sigma)).exp()
}

/// (torque term, action-rate term) regulation pair.
pub fn regulation_rewards(
    torques: &[f64; NJ],
    action: &[f64; NJ],
    prev_action: &[f64; NJ],
    shaping: &RewardShaping,
) -> (f64, f64) {
    let tau: f64 = torques.iter().map(|t| t * t).sum();
    let rate: f64 = action
        .iter()
        .zip(prev_action)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    (
        -shaping.torque_coeff * tau,
        -shaping.action_rate_coeff * rate,
    )
}

/// Everything a reward term may read at one control step.
#[derive(Debug, Clone)]
pub struct RewardContext<'a> {
    pub state: &'a SimState,
    pub momenta: SegmentMomenta,
    pub clock: &'a PhaseClock,
    pub mode: GaitMode,
    pub v_cmd: f64,
    pub action: [f64; NJ],
    pub prev_action: [f64; NJ],
    /// Forward base acceleration over the last control step, m/s².
    pub base_accel: f64,
}

/// Built-in reward term identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Tracking,
    TorqueRegulation,
    ActionRateRegulation,
    Momentum,
    ContactPattern,
    FootClearance,
    StraightKnee,
    PushOff,
    ShortContact,
    BaseStability,
    SmoothDeceleration,
}

impl TermKind {
    pub fn eval(self, ctx: &RewardContext<'_>, shaping: &RewardShaping) -> f64 {
        let contacts = [ctx.state.contacts[0].in_contact, ctx.state.contacts[1].in_contact];
        match self {
            TermKind::Tracking => tracking_reward(ctx.state.qd[0], ctx.v_cmd, shaping),
            TermKind::TorqueRegulation => {
                regulation_rewards(&ctx.state.last_torques, &ctx.action, &ctx.prev_action, shaping)
                    .0
            }
            TermKind::ActionRateRegulation => {
                regulation_rewards(&ctx.state.last_torques, &ctx.action, &ctx.prev_action, shaping)
                    .1
            }
            TermKind::Momentum => momentum_reward(
                ctx.momenta.total,
                ctx.momenta.left_arm,
                ctx.momenta.right_arm,
            ),
            TermKind::ContactPattern => {
                contact_pattern_reward(contacts, ctx.clock, ctx.mode, shaping)
            }
            TermKind::FootClearance => {
                let mut sum = 0.0;
                for foot in 0..2 {
                    if contacts[foot] {
                        continue;
                    }
                    if let Some(progress) =
                        swing_progress(ctx.clock.phase, foot, ctx.mode, shaping)
                    {
                        let height = ctx.state.contacts[foot].point.y;
                        sum += foot_clearance_reward(height, progress, shaping);
                    }
                }
                sum
            }
            TermKind::StraightKnee => {
                let q = ctx.state.joint_angles();
                straight_knee_reward(
                    [q[crate::sim::J_LKNEE], q[crate::sim::J_RKNEE]],
                    contacts,
                )
            }
            TermKind::PushOff => {
                let mut best: Option<f64> = None;
                for foot in 0..2 {
                    if !contacts[foot] {
                        continue;
                    }
                    if let Some(p) = stance_progress(ctx.clock.phase, foot, ctx.mode, shaping) {
                        best = Some(best.map_or(p, |b: f64| b.max(p)));
                    }
                }
                best.map_or(0.0, |p| pushoff_reward(ctx.state.base_vel(), p, shaping))
            }
            TermKind::ShortContact => {
                let mut sum = 0.0;
                for foot in 0..2 {
                    if contacts[foot] {
                        sum += short_contact_reward(
                            ctx.state.contacts[foot].stance_duration,
                            shaping,
                        );
                    }
                }
                sum
            }
            TermKind::BaseStability => base_stability_reward(
                ctx.state.base_vel(),
                ctx.state.pitch_rate(),
                &ctx.state.joint_rates(),
                shaping,
            ),
            TermKind::SmoothDeceleration => smooth_decel_reward(ctx.base_accel, ctx.mode, shaping),
        }
    }
}

/// Gait tagging of a reward term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tags {
    Shared,
    Modes(Vec<GaitMode>),
}

impl Tags {
    fn contains(&self, mode: GaitMode) -> bool {
        match self {
            Tags::Shared => true,
            Tags::Modes(list) => list.contains(&mode),
        }
    }
}

/// One registered reward term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTerm {
    pub name: String,
    pub weight: f64,
    pub tags: Tags,
    pub kind: TermKind,
}

/// Immutable ordered registry of reward terms; the insertion order freezes
/// the reward-vector layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRegistry {
    terms: Vec<RewardTerm>,
    pub shaping: RewardShaping,
}

/// Ordered per-term raw values.
pub type RewardVector = Vec<f64>;

impl RewardRegistry {
    pub fn new(terms: Vec<RewardTerm>, shaping: RewardShaping) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for term in &terms {
            if !term.weight.is_finite() || term.weight < 0.0 {
                return Err(GfError::Config(format!(
                    "reward term '{}': weight must be finite and non-negative",
                    term.name
                )));
            }
            if let Tags::Modes(list) = &term.tags {
                if list.is_empty() {
                    return Err(GfError::Config(format!(
                        "reward term '{}': tag set must be non-empty",
                        term.name
                    )));
                }
            }
            if !seen.insert(term.name.clone()) {
                return Err(GfError::Config(format!(
                    "duplicate reward term name '{}'",
                    term.name
                )));
            }
        }
        Ok(RewardRegistry { terms, shaping })
    }

    pub fn terms(&self) -> &[RewardTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == name)
    }

    /// Evaluates every term's raw value in registry order.
    pub fn evaluate(&self, ctx: &RewardContext<'_>) -> RewardVector {
        self.terms
            .iter()
            .map(|t| t.kind.eval(ctx, &self.shaping))
            .collect()
    }
}

/// The standard term set with default weights.
pub fn default_registry(shaping: RewardShaping) -> RewardRegistry {
    use GaitMode::*;
    let term = |name: &str, weight: f64, tags: Tags, kind: TermKind| RewardTerm {
        name: name.to_string(),
        weight,
        tags,
        kind,
    };
    let modes = |list: &[GaitMode]| Tags::Modes(list.to_vec());
    RewardRegistry::new(
        vec![
            term("tracking", 1.0, Tags::Shared, TermKind::Tracking),
            term("torque", 1.0, Tags::Shared, TermKind::TorqueRegulation),
            term(
                "action_rate",
                1.0,
                Tags::Shared,
                TermKind::ActionRateRegulation,
            ),
            term(
                "contact_pattern",
                0.5,
                modes(&[Stand, Walk, Run, WalkToStand, RunToWalk]),
                TermKind::ContactPattern,
            ),
            term(
                "momentum",
                0.25,
                modes(&[Walk, Run, WalkToStand, RunToWalk]),
                TermKind::Momentum,
            ),
            term("foot_clearance", 1.0, modes(&[Walk]), TermKind::FootClearance),
            term("straight_knee", 0.3, modes(&[Walk]), TermKind::StraightKnee),
            term("pushoff", 0.3, modes(&[Run]), TermKind::PushOff),
            term("short_contact", 0.5, modes(&[Run]), TermKind::ShortContact),
            term(
                "base_stability",
                0.5,
                modes(&[Stand]),
                TermKind::BaseStability,
            ),
            term(
                "smooth_decel",
                0.5,
                modes(&[WalkToStand, RunToWalk]),
                TermKind::SmoothDeceleration,
            ),
        ],
        shaping,
    )
    .expect("default registry is valid")
}

/// Per-term routing weights for a mode. Shared terms and terms tagged with
/// the mode route at 1; a transition blends its endpoints' terms at 0.5.
pub fn build_mask(registry: &RewardRegistry, mode: GaitMode) -> Vec<f64> {
    registry
        .terms
        .iter()
        .map(|term| match &term.tags {
            Tags::Shared => 1.0,
            tags if tags.contains(mode) => 1.0,
            tags => {
                if let Some((source, target)) = mode.endpoints() {
                    let blend = 0.5 * f64::from(tags.contains(source))
                        + 0.5 * f64::from(tags.contains(target));
                    blend.min(1.0)
                } else {
                    0.0
                }
            }
        })
        .collect()
}

/// Σ_k w_k·m_k·r_k.
pub fn route_total(values: &[f64], mask: &[f64], registry: &RewardRegistry) -> Result<f64> {
    if values.len() != registry.len() || mask.len() != registry.len() {
        return Err(GfError::DimensionMismatch {
            what: "reward vector / mask length",
            expected: registry.len(),
            got: values.len().min(mask.len()),
        });
    }
    Ok(registry
        .terms
        .iter()
        .zip(values)
        .zip(mask)
        .map(|((term, r), m)| term.weight * m * r)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::GaitParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    #[test]
    fn momentum_reward_examples() {
        assert_eq!(momentum_reward(0.0, 0.0, 0.0), 0.0);
        assert_relative_eq!(momentum_reward(0.5, 0.2, 0.2), -0.25, epsilon = 1e-15);
        assert_relative_eq!(momentum_reward(0.0, 1.0, -1.0), -1.6, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn momentum_reward_nonpositive(t in -10.0..10.0f64, l in -10.0..10.0f64, r in -10.0..10.0f64) {
            let v = momentum_reward(t, l, r);
            prop_assert!(v <= 0.0);
            prop_assert_eq!(v == 0.0, t == 0.0 && l == r);
        }

        #[test]
        fn momentum_arm_term_antisymmetric(t in -5.0..5.0f64, l in -5.0..5.0f64, r in -5.0..5.0f64) {
            // (L_la, L_ra) → (−L_ra, −L_la) leaves the arm term unchanged
            let a = momentum_reward(t, l, r);
            let b = momentum_reward(t, -r, -l);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    fn shaping() -> RewardShaping {
        RewardShaping::default()
    }

    fn clock_at(phase: f64) -> PhaseClock {
        let mut c = PhaseClock::new(GaitParams::default());
        c.phase = phase;
        c
    }

    #[test]
    fn contact_pattern_examples() {
        let s = shaping();
        let c = clock_at(0.3);
        assert_eq!(
            contact_pattern_reward([true, true], &c, GaitMode::Stand, &s),
            1.0
        );
        assert_eq!(
            contact_pattern_reward([true, false], &c, GaitMode::Stand, &s),
            0.5
        );
        // run flight window: phase just past the left stance window, before π
        let c = clock_at(0.8 * std::f64::consts::PI);
        assert_eq!(
            contact_pattern_reward([false, false], &c, GaitMode::Run, &s),
            1.0
        );
    }

    #[test]
    fn walk_schedule_has_double_support() {
        let s = shaping();
        // just after φ = π both feet are expected down
        let phase = std::f64::consts::PI + 0.5 * s.walk_double_support;
        assert_eq!(expected_contacts(phase, GaitMode::Walk, &s), [true, true]);
        // mid left stance: right foot in swing
        assert_eq!(
            expected_contacts(std::f64::consts::FRAC_PI_2, GaitMode::Walk, &s),
            [true, false]
        );
    }

    #[test]
    fn foot_clearance_examples() {
        let s = shaping();
        let target = s.clearance_peak; // progress 0.5 → peak
        assert_eq!(foot_clearance_reward(target, 0.5, &s), 0.0);
        assert_relative_eq!(
            foot_clearance_reward(target - 0.02, 0.5, &s),
            -4e-4,
            epsilon = 1e-15
        );
        assert_eq!(foot_clearance_reward(target + 0.05, 0.5, &s), 0.0);
    }

    #[test]
    fn straight_knee_examples() {
        assert_eq!(straight_knee_reward([0.0, 0.5], [true, false]), 0.0);
        assert_relative_eq!(
            straight_knee_reward([0.3, 0.0], [true, false]),
            -0.09,
            epsilon = 1e-15
        );
        assert_eq!(straight_knee_reward([0.4, 0.4], [false, false]), 0.0);
    }

    #[test]
    fn pushoff_examples() {
        let s = shaping();
        assert_eq!(pushoff_reward(Vector2::new(2.0, 0.5), 0.5, &s), 0.0);
        assert_relative_eq!(
            pushoff_reward(Vector2::new(2.0, 0.5), 0.9, &s),
            1.5,
            epsilon = 1e-15
        );
        assert_eq!(pushoff_reward(Vector2::new(-1.0, -0.2), 0.9, &s), 0.0);
    }

    #[test]
    fn short_contact_examples() {
        let s = shaping();
        assert_eq!(short_contact_reward(0.1, &s), 0.0);
        assert_relative_eq!(short_contact_reward(0.35, &s), -0.5, epsilon = 1e-12);
        assert_eq!(short_contact_reward(0.25, &s), 0.0);
    }

    #[test]
    fn base_stability_examples() {
        let s = shaping();
        let zero = [0.0; NJ];
        assert_eq!(base_stability_reward(Vector2::zeros(), 0.0, &zero, &s), 0.0);
        assert_relative_eq!(
            base_stability_reward(Vector2::new(0.1, 0.0), 0.0, &zero, &s),
            -0.01,
            epsilon = 1e-15
        );
        let unit = [1.0 / (NJ as f64).sqrt(); NJ];
        assert_relative_eq!(
            base_stability_reward(Vector2::zeros(), 0.0, &unit, &s),
            -0.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn smooth_decel_examples() {
        let s = shaping();
        assert_eq!(smooth_decel_reward(1.0, GaitMode::WalkToStand, &s), 0.0);
        assert_relative_eq!(
            smooth_decel_reward(3.0, GaitMode::RunToWalk, &s),
            -1.0,
            epsilon = 1e-15
        );
        assert_eq!(smooth_decel_reward(2.0, GaitMode::WalkToStand, &s), 0.0);
    }

    #[test]
    fn tracking_examples() {
        let s = shaping();
        assert_eq!(tracking_reward(1.3, 1.3, &s), 1.0);
        assert_relative_eq!(
            tracking_reward(s.tracking_sigma, 0.0, &s),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        assert!(tracking_reward(100.0, 0.0, &s) < 1e-100);
    }

    #[test]
    fn regulation_examples() {
        let s = shaping();
        let zero = [0.0; NJ];
        assert_eq!(regulation_rewards(&zero, &zero, &zero, &s), (0.0, 0.0));
        let mut tau = [0.0; NJ];
        tau[0] = 10.0;
        let (t, a) = regulation_rewards(&tau, &zero, &zero, &s);
        assert_relative_eq!(t, -0.01, epsilon = 1e-15);
        assert_eq!(a, 0.0);
        let mut action = [0.0; NJ];
        action[2] = 1.0;
        let (_, a) = regulation_rewards(&zero, &action, &zero, &s);
        assert_relative_eq!(a, -0.01, epsilon = 1e-15);
    }

    #[test]
    fn mask_examples() {
        let reg = default_registry(shaping());
        let stand = build_mask(&reg, GaitMode::Stand);
        assert_eq!(stand[reg.index_of("pushoff").unwrap()], 0.0);
        let walk = build_mask(&reg, GaitMode::Walk);
        assert_eq!(walk[reg.index_of("foot_clearance").unwrap()], 1.0);
        let w2s = build_mask(&reg, GaitMode::WalkToStand);
        assert_eq!(w2s[reg.index_of("straight_knee").unwrap()], 0.5);
        // its own transition terms at full weight
        assert_eq!(w2s[reg.index_of("smooth_decel").unwrap()], 1.0);
        assert_eq!(w2s[reg.index_of("momentum").unwrap()], 1.0);
    }

    #[test]
    fn mask_rows_are_binary_or_blended() {
        let reg = default_registry(shaping());
        for mode in GaitMode::ALL {
            let mask = build_mask(&reg, mode);
            for m in &mask {
                if mode.is_transition() {
                    assert!((0.0..=1.0).contains(m));
                } else {
                    assert!(*m == 0.0 || *m == 1.0);
                }
            }
            // shared terms route everywhere
            assert_eq!(mask[reg.index_of("tracking").unwrap()], 1.0);
        }
    }

    #[test]
    fn route_total_examples() {
        let reg = RewardRegistry::new(
            vec![
                RewardTerm {
                    name: "a".into(),
                    weight: 1.0,
                    tags: Tags::Shared,
                    kind: TermKind::Tracking,
                },
                RewardTerm {
                    name: "b".into(),
                    weight: 1.0,
                    tags: Tags::Shared,
                    kind: TermKind::Tracking,
                },
                RewardTerm {
                    name: "c".into(),
                    weight: 2.0,
                    tags: Tags::Shared,
                    kind: TermKind::Tracking,
                },
            ],
            shaping(),
        )
        .unwrap();
        assert_eq!(
            route_total(&[2.0, 5.0, 3.0], &[0.0, 0.0, 0.0], &reg).unwrap(),
            0.0
        );
        assert_eq!(
            route_total(&[2.0, 5.0, 3.0], &[1.0, 0.0, 1.0], &reg).unwrap(),
            8.0
        );
        assert!(route_total(&[1.0], &[1.0, 1.0, 1.0], &reg).is_err());
    }

    #[test]
    fn routing_independence() {
        // perturbing an exclusively-tagged term's value must not change the
        // total routed under any non-adjacent mode
        let reg = default_registry(shaping());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let values: Vec<f64> = (0..reg.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for (k, term) in reg.terms().iter().enumerate() {
                let Tags::Modes(tags) = &term.tags else { continue };
                for mode in GaitMode::ALL {
                    let adjacent = tags.contains(&mode)
                        || mode.endpoints().is_some_and(|(s, t)| {
                            tags.contains(&s) || tags.contains(&t)
                        });
                    if adjacent {
                        continue;
                    }
                    let mask = build_mask(&reg, mode);
                    let base = route_total(&values, &mask, &reg).unwrap();
                    let mut perturbed = values.clone();
                    perturbed[k] += rng.gen_range(-10.0..10.0);
                    let after = route_total(&perturbed, &mask, &reg).unwrap();
                    assert_eq!(base, after);
                }
            }
        }
    }

    #[test]
    fn route_total_matches_loop_oracle_and_is_linear() {
        let reg = default_registry(shaping());
        let n = reg.len();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let m: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total = route_total(&r, &m, &reg).unwrap();
            // independent elementwise loop
            let mut oracle = 0.0;
            for k in 0..n {
                oracle += reg.terms()[k].weight * m[k] * r[k];
            }
            assert!((total - oracle).abs() <= 1e-12);
            // superposition
            let r2: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let sum: Vec<f64> = r.iter().zip(&r2).map(|(a, b)| a + b).collect();
            let lhs = route_total(&sum, &m, &reg).unwrap();
            let rhs = route_total(&r, &m, &reg).unwrap() + route_total(&r2, &m, &reg).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn registry_rejects_duplicates_and_bad_weights() {
        let t = RewardTerm {
            name: "x".into(),
            weight: 1.0,
            tags: Tags::Shared,
            kind: TermKind::Tracking,
        };
        assert!(RewardRegistry::new(vec![t.clone(), t.clone()], shaping()).is_err());
        let mut bad = t.clone();
        bad.weight = -1.0;
        assert!(RewardRegistry::new(vec![bad], shaping()).is_err());
        let mut empty = t;
        empty.tags = Tags::Modes(vec![]);
        assert!(RewardRegistry::new(vec![empty], shaping()).is_err());
    }
}
