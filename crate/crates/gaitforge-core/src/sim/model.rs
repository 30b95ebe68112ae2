use serde::{Deserialize, Serialize};

use crate::error::{GfError, Result};

/// Number of generalized coordinates: base x, base z, base pitch, 6 joints.
pub const NQ: usize = 9;
/// Number of actuated joints: L-hip, L-knee, R-hip, R-knee, L-shoulder, R-shoulder.
pub const NJ: usize = 6;
/// Offset of the first joint coordinate inside the generalized vector.
pub const JOINT_OFFSET: usize = 3;

/// Joint indices within the 6-joint actuation vector.
pub const J_LHIP: usize = 0;
pub const J_LKNEE: usize = 1;
pub const J_RHIP: usize = 2;
pub const J_RKNEE: usize = 3;
pub const J_LSHOULDER: usize = 4;
pub const J_RSHOULDER: usize = 5;

/// Inertial and geometric description of one rigid link.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    /// Mass in kg.
    pub mass: f64,
    /// Link length in m (joint to joint, or joint to tip).
    pub length: f64,
    /// Center-of-mass offset along the link from its proximal joint, in m.
    pub com_offset: f64,
    /// Rotational inertia about the link CoM, kg·m².
    pub inertia: f64,
}

/// Per-joint actuation limits and PD gains.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    /// Lower position limit, rad.
    pub lower: f64,
    /// Upper position limit, rad.
    pub upper: f64,
    /// Torque limit, N·m (applied as ±limit).
    pub torque_limit: f64,
    /// Proportional gain, N·m/rad.
    pub kp: f64,
    /// Derivative gain, N·m·s/rad.
    pub kd: f64,
}

/// Full physical model of the planar 7-link biped.
///
/// The morphology is a torso, two thigh+shank legs with point feet, and two
/// single-joint arms, all moving in the sagittal plane. Both hips and both
/// shoulders attach at shared points on the torso.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    pub torso: LinkSpec,
    pub thigh: LinkSpec,
    pub shank: LinkSpec,
    pub arm: LinkSpec,
    /// Joint specs in actuation order: L-hip, L-knee, R-hip, R-knee,
    /// L-shoulder, R-shoulder.
    pub joints: [JointSpec; NJ],
    /// Gravity magnitude, m/s² (acts along −z).
    pub gravity: f64,
    /// Ground Coulomb friction coefficient.
    pub friction: f64,
    /// Contact normal stiffness, N/m.
    pub contact_stiffness: f64,
    /// Contact normal damping, N·s/m. Also used as the tangential viscous
    /// coefficient before the Coulomb clamp.
    pub contact_damping: f64,
    /// Nominal joint pose the policy's action offsets are added to, rad.
    pub default_pose: [f64; NJ],
}

fn uniform_rod_inertia(mass: f64, length: f64) -> f64 {
    mass * length * length / 12.0
}

impl Default for ModelSpec {
    fn default() -> Self {
        let link = |mass: f64, length: f64| LinkSpec {
            mass,
            length,
            com_offset: length / 2.0,
            inertia: uniform_rod_inertia(mass, length),
        };
        let leg_joint = JointSpec {
            lower: -2.5,
            upper: 2.5,
            torque_limit: 120.0,
            kp: 60.0,
            kd: 2.0,
        };
        let arm_joint = JointSpec {
            lower: -2.5,
            upper: 2.5,
            torque_limit: 40.0,
            kp: 20.0,
            kd: 1.0,
        };
        ModelSpec {
            torso: link(10.0, 0.5),
            thigh: link(3.0, 0.4),
            shank: link(2.0, 0.4),
            arm: link(1.0, 0.5),
            joints: [
                leg_joint, leg_joint, leg_joint, leg_joint, arm_joint, arm_joint,
            ],
            gravity: 9.81,
            friction: 1.0,
            contact_stiffness: 20_000.0,
            contact_damping: 600.0,
            default_pose: [0.0, 0.1, 0.0, 0.1, 0.0, 0.0],
        }
    }
}

impl ModelSpec {
    /// Checks all structural invariants, returning the first violation found.
    pub fn validate(&self) -> Result<()> {
        let links = [
            ("torso", &self.torso),
            ("thigh", &self.thigh),
            ("shank", &self.shank),
            ("arm", &self.arm),
        ];
        for (name, l) in links {
            if !(l.mass > 0.0 && l.length > 0.0 && l.inertia > 0.0) {
                return Err(GfError::InvalidSpec(format!(
                    "{name}: mass, length and inertia must be strictly positive"
                )));
            }
            if !(0.0..=l.length).contains(&l.com_offset) {
                return Err(GfError::InvalidSpec(format!(
                    "{name}: com_offset must lie within [0, length]"
                )));
            }
        }
        for (i, j) in self.joints.iter().enumerate() {
            if j.lower >= j.upper {
                return Err(GfError::InvalidSpec(format!(
                    "joint {i}: lower limit must be below upper limit"
                )));
            }
            if j.torque_limit <= 0.0 {
                return Err(GfError::InvalidSpec(format!(
                    "joint {i}: torque limit must be positive"
                )));
            }
            if j.kp < 0.0 || j.kd < 0.0 {
                return Err(GfError::InvalidSpec(format!(
                    "joint {i}: PD gains must be non-negative"
                )));
            }
        }
        if self.friction < 0.0 {
            return Err(GfError::InvalidSpec("friction must be >= 0".into()));
        }
        if self.contact_stiffness <= 0.0 || self.contact_damping < 0.0 {
            return Err(GfError::InvalidSpec(
                "contact stiffness must be positive and damping non-negative".into(),
            ));
        }
        if self.gravity < 0.0 {
            return Err(GfError::InvalidSpec("gravity must be >= 0".into()));
        }
        Ok(())
    }

    /// Base height at which straight-ish legs in the default pose put the
    /// lowest foot exactly on the ground (pitch 0).
    pub fn nominal_standing_height(&self) -> f64 {
        let foot = |hip: f64, knee: f64| {
            -self.thigh.length * hip.cos() - self.shank.length * (hip + knee).cos()
        };
        let left = foot(self.default_pose[J_LHIP], self.default_pose[J_LKNEE]);
        let right = foot(self.default_pose[J_RHIP], self.default_pose[J_RKNEE]);
        -left.min(right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        ModelSpec::default().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_mass() {
        let mut spec = ModelSpec::default();
        spec.thigh.mass = 0.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn rejects_inverted_joint_limits() {
        let mut spec = ModelSpec::default();
        spec.joints[2].lower = 1.0;
        spec.joints[2].upper = -1.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn standing_height_straight_legs() {
        let spec = ModelSpec { default_pose: [0.0; NJ], ..ModelSpec::default() };
        let h = spec.nominal_standing_height();
        assert!((h - (spec.thigh.length + spec.shank.length)).abs() < 1e-12);
    }
}
