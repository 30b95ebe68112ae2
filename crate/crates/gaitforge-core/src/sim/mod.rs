//! Deterministic sagittal-plane rigid-body simulator for a 7-link biped with
//! penalty ground contact, joint PD control and centroidal momentum output.

mod dynamics;
mod init;
mod kinematics;
mod model;
mod state;

pub use dynamics::{
    apply_push, body_point_heights, centroidal_momenta, detect_contacts, pd_torques, step,
    whole_body_com,
};
pub use init::{randomize_dynamics, randomize_with_ranges, reset, reset_with_noise, RandomizationRanges};
pub use model::{
    JointSpec, LinkSpec, ModelSpec, JOINT_OFFSET, J_LHIP, J_LKNEE, J_LSHOULDER, J_RHIP, J_RKNEE,
    J_RSHOULDER, NJ, NQ,
};
pub use state::{ContactInfo, GenVec, SegmentMomenta, SimState};
