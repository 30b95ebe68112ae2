//! Articulated dynamics: mass matrix assembly from link Jacobians, penalty
//! ground contact, joint PD control and semi-implicit Euler integration.

use nalgebra::{SMatrix, Vector2};

use crate::error::{GfError, Result};

use super::kinematics::{
    angle_selector, base_point_chain, foot_chains, link_rate, link_table, point_kin, PointKin,
    L_LARM, L_LSHANK, L_LTHIGH, L_RARM, L_RSHANK, L_RTHIGH, L_TORSO,
};
use super::model::{ModelSpec, JOINT_OFFSET, NJ, NQ};
use super::state::{ContactInfo, GenVec, SegmentMomenta, SimState};

type MassMatrix = SMatrix<f64, NQ, NQ>;

/// Joint-level PD control with torque clamping:
/// τ_i = clamp(Kp_i·(target_i − q_i) − Kd_i·q̇_i, ±limit_i).
pub fn pd_torques(
    q_joints: &[f64; NJ],
    qd_joints: &[f64; NJ],
    targets: &[f64; NJ],
    spec: &ModelSpec,
) -> [f64; NJ] {
    let mut tau = [0.0; NJ];
    for i in 0..NJ {
        let j = &spec.joints[i];
        let raw = j.kp * (targets[i] - q_joints[i]) - j.kd * qd_joints[i];
        tau[i] = raw.clamp(-j.torque_limit, j.torque_limit);
    }
    tau
}

/// Penalty contact force at a point: non-negative normal from stiffness and
/// damping, viscous tangential clamped to the Coulomb cone.
fn contact_force(kin: &PointKin, spec: &ModelSpec) -> (bool, Vector2<f64>) {
    let height = kin.pos.y;
    if height > 0.0 {
        return (false, Vector2::zeros());
    }
    let depth = -height;
    let normal =
        (spec.contact_stiffness * depth + spec.contact_damping * (-kin.vel.y)).max(0.0);
    let limit = spec.friction * normal;
    let tangential = (-spec.contact_damping * kin.vel.x).clamp(-limit, limit);
    (true, Vector2::new(tangential, normal))
}

fn updated_contact(prev: &ContactInfo, kin: &PointKin, spec: &ModelSpec) -> ContactInfo {
    let (in_contact, grf) = contact_force(kin, spec);
    let mut info = *prev;
    if in_contact != prev.in_contact {
        // touchdown resets the stance clock, liftoff the swing clock
        if in_contact {
            info.stance_duration = 0.0;
        } else {
            info.swing_duration = 0.0;
        }
    }
    info.in_contact = in_contact;
    info.grf = grf;
    info.point = kin.pos;
    info
}

/// Recomputes per-foot contact flags and ground reaction forces for the
/// current state. Stance/swing clocks reset at transitions; advancing them
/// is `step`'s job.
pub fn detect_contacts(state: &SimState, spec: &ModelSpec) -> [ContactInfo; 2] {
    let chains = foot_chains(spec);
    [0, 1].map(|i| {
        let kin = point_kin(&chains[i], &state.q, &state.qd);
        updated_contact(&state.contacts[i], &kin, spec)
    })
}

/// Heights of both knee points and the (shared) hip point above ground.
/// Used for the critic's body-contact indicators.
pub fn body_point_heights(state: &SimState, spec: &ModelSpec) -> [f64; 3] {
    let knees = super::kinematics::knee_chains(spec);
    let lk = point_kin(&knees[0], &state.q, &state.qd).pos.y;
    let rk = point_kin(&knees[1], &state.q, &state.qd).pos.y;
    [lk, rk, state.q[1]]
}

fn solve_accelerations(
    state: &SimState,
    torques: &[f64; NJ],
    spec: &ModelSpec,
) -> Result<(GenVec, [ContactInfo; 2])> {
    let links = link_table(spec);
    let mut mass = MassMatrix::zeros();
    let mut force = GenVec::zeros();
    let gravity = Vector2::new(0.0, -spec.gravity);

    for link in &links {
        let kin = point_kin(&link.com_chain, &state.q, &state.qd);
        mass += kin.jac.transpose() * kin.jac * link.mass;
        let w = angle_selector(link);
        mass += w * w.transpose() * link.inertia;
        force += kin.jac.transpose() * (gravity - kin.jdot_qd) * link.mass;
    }

    for (i, tau) in torques.iter().enumerate() {
        force[JOINT_OFFSET + i] += tau;
    }

    let chains = foot_chains(spec);
    let contacts = [0, 1].map(|i| {
        let kin = point_kin(&chains[i], &state.q, &state.qd);
        let info = updated_contact(&state.contacts[i], &kin, spec);
        force += kin.jac.transpose() * info.grf;
        info
    });

    if state.disturbance_force != Vector2::zeros() {
        let chain = base_point_chain(state.disturbance_point);
        let kin = point_kin(&chain, &state.q, &state.qd);
        force += kin.jac.transpose() * state.disturbance_force;
    }

    let qdd = mass
        .cholesky()
        .map(|ch| ch.solve(&force))
        .ok_or(GfError::Divergence {
            index: 0,
            value: f64::NAN,
        })?;
    Ok((qdd, contacts))
}

/// Advances the state by `dt` under PD tracking of `joint_targets` using
/// semi-implicit Euler (velocities first, then positions).
pub fn step(
    state: &SimState,
    joint_targets: &[f64; NJ],
    dt: f64,
    spec: &ModelSpec,
) -> Result<SimState> {
    assert!(dt > 0.0 && dt <= 0.02, "dt must lie in (0, 0.02]");
    let torques = pd_torques(
        &state.joint_angles(),
        &state.joint_rates(),
        joint_targets,
        spec,
    );
    let (qdd, _) = solve_accelerations(state, &torques, spec)?;

    let mut next = state.clone();
    next.qd += qdd * dt;
    next.q += next.qd * dt;
    next.t += dt;
    next.last_torques = torques;

    if let Some((index, value)) = next.first_nonfinite() {
        return Err(GfError::Divergence { index, value });
    }

    // refresh contacts against the new configuration and advance the clocks
    let refreshed = detect_contacts(&next, spec);
    for (i, mut info) in refreshed.into_iter().enumerate() {
        if info.in_contact {
            info.stance_duration += dt;
        } else {
            info.swing_duration += dt;
        }
        next.contacts[i] = info;
    }
    Ok(next)
}

/// Instantaneous velocity kick on the base, used for push disturbances.
pub fn apply_push(state: &SimState, impulse: Vector2<f64>) -> SimState {
    let mut next = state.clone();
    next.qd[0] += impulse.x;
    next.qd[1] += impulse.y;
    next
}

/// Per-segment angular momentum about the whole-body CoM:
/// L_i = m_i·(c_i − c) × v_i + I_i·ω_i, out-of-plane component.
pub fn centroidal_momenta(state: &SimState, spec: &ModelSpec) -> SegmentMomenta {
    let links = link_table(spec);
    let mut total_mass = 0.0;
    let mut com = Vector2::zeros();
    let kins: Vec<PointKin> = links
        .iter()
        .map(|l| point_kin(&l.com_chain, &state.q, &state.qd))
        .collect();
    for (link, kin) in links.iter().zip(&kins) {
        total_mass += link.mass;
        com += kin.pos * link.mass;
    }
    com /= total_mass;

    let momentum = |idx: usize| {
        let link = &links[idx];
        let kin = &kins[idx];
        let r = kin.pos - com;
        link.mass * (r.x * kin.vel.y - r.y * kin.vel.x) + link.inertia * link_rate(link, &state.qd)
    };

    let legs = momentum(L_LTHIGH) + momentum(L_LSHANK) + momentum(L_RTHIGH) + momentum(L_RSHANK);
    let left_arm = momentum(L_LARM);
    let right_arm = momentum(L_RARM);
    let arms = left_arm + right_arm;
    let torso = momentum(L_TORSO);
    SegmentMomenta {
        legs,
        arms,
        torso,
        total: legs + arms + torso,
        left_arm,
        right_arm,
    }
}

/// Whole-body CoM position and velocity, m and m/s.
pub fn whole_body_com(state: &SimState, spec: &ModelSpec) -> (Vector2<f64>, Vector2<f64>) {
    let links = link_table(spec);
    let mut total_mass = 0.0;
    let mut com = Vector2::zeros();
    let mut vel = Vector2::zeros();
    for link in &links {
        let kin = point_kin(&link.com_chain, &state.q, &state.qd);
        total_mass += link.mass;
        com += kin.pos * link.mass;
        vel += kin.vel * link.mass;
    }
    (com / total_mass, vel / total_mass)
}
