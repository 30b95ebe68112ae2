use nalgebra::{SVector, Vector2};
use serde::{Deserialize, Serialize};

use super::model::{NJ, NQ};

pub type GenVec = SVector<f64, NQ>;

/// Contact bookkeeping for one foot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactInfo {
    pub in_contact: bool,
    /// Ground reaction force (tangential, normal) in the world frame, N.
    pub grf: Vector2<f64>,
    /// World-frame contact point, m.
    pub point: Vector2<f64>,
    /// Time since touchdown, s. Advances only while in contact.
    pub stance_duration: f64,
    /// Time since liftoff, s. Advances only while airborne.
    pub swing_duration: f64,
}

impl Default for ContactInfo {
    fn default() -> Self {
        ContactInfo {
            in_contact: false,
            grf: Vector2::zeros(),
            point: Vector2::zeros(),
            stance_duration: 0.0,
            swing_duration: 0.0,
        }
    }
}

/// Per-segment angular momentum about the whole-body CoM, out-of-plane axis
/// component, kg·m²/s.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SegmentMomenta {
    pub legs: f64,
    pub arms: f64,
    pub torso: f64,
    pub total: f64,
    pub left_arm: f64,
    pub right_arm: f64,
}

/// Latent state of the planar biped.
///
/// Generalized coordinate order: base x, base z, base pitch, then joints
/// L-hip, L-knee, R-hip, R-knee, L-shoulder, R-shoulder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub q: GenVec,
    pub qd: GenVec,
    /// Simulation time, s.
    pub t: f64,
    /// Contact info per foot, [left, right].
    pub contacts: [ContactInfo; 2],
    /// Joint torques applied on the last step, N·m.
    pub last_torques: [f64; NJ],
    /// Constant external force on the base, world frame, N.
    pub disturbance_force: Vector2<f64>,
    /// Application point of the disturbance force, base body frame, m.
    pub disturbance_point: Vector2<f64>,
}

impl SimState {
    pub fn new(q: GenVec, qd: GenVec) -> Self {
        SimState {
            q,
            qd,
            t: 0.0,
            contacts: [ContactInfo::default(); 2],
            last_torques: [0.0; NJ],
            disturbance_force: Vector2::zeros(),
            disturbance_point: Vector2::zeros(),
        }
    }

    pub fn base_pos(&self) -> Vector2<f64> {
        Vector2::new(self.q[0], self.q[1])
    }

    pub fn base_vel(&self) -> Vector2<f64> {
        Vector2::new(self.qd[0], self.qd[1])
    }

    pub fn pitch(&self) -> f64 {
        self.q[2]
    }

    pub fn pitch_rate(&self) -> f64 {
        self.qd[2]
    }

    pub fn joint_angles(&self) -> [f64; NJ] {
        let mut out = [0.0; NJ];
        out.copy_from_slice(&self.q.as_slice()[3..NQ]);
        out
    }

    pub fn joint_rates(&self) -> [f64; NJ] {
        let mut out = [0.0; NJ];
        out.copy_from_slice(&self.qd.as_slice()[3..NQ]);
        out
    }

    /// Index of the first non-finite coordinate or velocity, if any.
    pub fn first_nonfinite(&self) -> Option<(usize, f64)> {
        for i in 0..NQ {
            if !self.q[i].is_finite() {
                return Some((i, self.q[i]));
            }
            if !self.qd[i].is_finite() {
                return Some((i, self.qd[i]));
            }
        }
        None
    }
}
