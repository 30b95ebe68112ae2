//! Episode initialization and domain randomization.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use super::model::{ModelSpec, NJ};
use super::state::{GenVec, SimState};

/// Multiplicative randomization ranges over the nominal model, plus the push
/// disturbance schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RandomizationRanges {
    /// Ground friction scale, [lo, hi] × nominal.
    pub friction: [f64; 2],
    /// Torso mass scale, [lo, hi] × nominal.
    pub torso_mass: [f64; 2],
    /// PD gain scale (applied to every joint's Kp and, independently, Kd).
    pub gains: [f64; 2],
    /// Max |horizontal velocity kick| applied as a push, m/s.
    pub push_magnitude: f64,
    /// Seconds of sim time between pushes.
    pub push_interval: f64,
}

impl Default for RandomizationRanges {
    fn default() -> Self {
        RandomizationRanges {
            friction: [0.5, 1.25],
            torso_mass: [0.8, 1.2],
            gains: [0.9, 1.1],
            push_magnitude: 0.5,
            push_interval: 4.0,
        }
    }
}

fn sample_scale(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

/// Returns a perturbed copy of the spec. Deterministic for a given rng state.
pub fn randomize_with_ranges(
    spec: &ModelSpec,
    ranges: &RandomizationRanges,
    rng: &mut impl Rng,
) -> ModelSpec {
    let mut out = spec.clone();
    out.friction *= sample_scale(rng, ranges.friction);
    out.torso.mass *= sample_scale(rng, ranges.torso_mass);
    let kp_scale = sample_scale(rng, ranges.gains);
    let kd_scale = sample_scale(rng, ranges.gains);
    for joint in &mut out.joints {
        joint.kp *= kp_scale;
        joint.kd *= kd_scale;
    }
    out
}

/// Randomizes friction, torso mass and PD gains with the default ranges.
pub fn randomize_dynamics(spec: &ModelSpec, rng_seed: u64) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    randomize_with_ranges(spec, &RandomizationRanges::default(), &mut rng)
}

/// Initial state: base at the pose's standing height, joints at the default
/// pose plus uniform noise of the given amplitude (rad and SI rates).
pub fn reset_with_noise(spec: &ModelSpec, noise: f64, rng: &mut impl Rng) -> SimState {
    let mut q = GenVec::zeros();
    let mut qd = GenVec::zeros();
    let mut jitter = |amp: f64| {
        if amp == 0.0 {
            0.0
        } else {
            rng.gen_range(-amp..amp)
        }
    };
    for i in 0..NJ {
        q[3 + i] = spec.default_pose[i] + jitter(noise);
    }
    q[2] = jitter(noise);
    let mut posed = spec.clone();
    posed.default_pose = core::array::from_fn(|i| q[3 + i]);
    q[1] = posed.nominal_standing_height();
    for i in 0..3 + NJ {
        qd[i] = jitter(noise);
    }
    SimState::new(q, qd)
}

/// Initial state distribution with the standard ±0.05 noise amplitude.
pub fn reset(spec: &ModelSpec, rng_seed: u64) -> SimState {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    reset_with_noise(spec, 0.05, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_ranges_leave_spec_unchanged() {
        let spec = ModelSpec::default();
        let ranges = RandomizationRanges {
            friction: [1.0, 1.0],
            torso_mass: [1.0, 1.0],
            gains: [1.0, 1.0],
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(randomize_with_ranges(&spec, &ranges, &mut rng), spec);
    }

    #[test]
    fn randomization_is_deterministic_per_seed() {
        let spec = ModelSpec::default();
        assert_eq!(randomize_dynamics(&spec, 42), randomize_dynamics(&spec, 42));
        assert_ne!(randomize_dynamics(&spec, 42), randomize_dynamics(&spec, 43));
    }

    #[test]
    fn friction_samples_stay_in_range_with_uniform_mean() {
        let spec = ModelSpec::default();
        let ranges = RandomizationRanges::default();
        let lo = spec.friction * ranges.friction[0];
        let hi = spec.friction * ranges.friction[1];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sum = 0.0;
        for _ in 0..1000 {
            let mu = randomize_with_ranges(&spec, &ranges, &mut rng).friction;
            assert!(mu >= lo && mu <= hi);
            sum += mu;
        }
        let mid = 0.5 * (lo + hi);
        assert!((sum / 1000.0 - mid).abs() < 0.05 * (hi - lo));
    }

    #[test]
    fn reset_without_noise_is_exact_default_pose() {
        let spec = ModelSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let state = reset_with_noise(&spec, 0.0, &mut rng);
        for i in 0..NJ {
            assert_eq!(state.q[3 + i], spec.default_pose[i]);
        }
        assert_eq!(state.qd, GenVec::zeros());
        assert_eq!(state.q[1], spec.nominal_standing_height());
    }

    #[test]
    fn reset_is_deterministic_and_bounded() {
        let spec = ModelSpec::default();
        assert_eq!(reset(&spec, 9), reset(&spec, 9));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let s = reset_with_noise(&spec, 0.05, &mut rng);
            for i in 0..NJ {
                assert!((s.q[3 + i] - spec.default_pose[i]).abs() <= 0.05);
            }
        }
    }
}
