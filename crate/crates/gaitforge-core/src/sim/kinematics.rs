//! Planar forward kinematics for the 7-link biped.
//!
//! Every point of interest (link CoM, foot, knee) is the base position plus a
//! chain of body-frame vectors, each rotated by an absolute angle that is a
//! sum of generalized coordinates. The sums are encoded as bitmasks over the
//! coordinate vector, which makes Jacobians and their velocity products
//! (J̇·q̇) direct to assemble.

use nalgebra::{SMatrix, Vector2};

use super::model::{ModelSpec, NQ};
use super::state::GenVec;

pub const N_LINKS: usize = 7;
pub const L_TORSO: usize = 0;
pub const L_LTHIGH: usize = 1;
pub const L_LSHANK: usize = 2;
pub const L_RTHIGH: usize = 3;
pub const L_RSHANK: usize = 4;
pub const L_LARM: usize = 5;
pub const L_RARM: usize = 6;

const PITCH: u16 = 1 << 2;
const LTHIGH: u16 = PITCH | 1 << 3;
const LSHANK: u16 = LTHIGH | 1 << 4;
const RTHIGH: u16 = PITCH | 1 << 5;
const RSHANK: u16 = RTHIGH | 1 << 6;
const LARM: u16 = PITCH | 1 << 7;
const RARM: u16 = PITCH | 1 << 8;

pub type Jacobian2 = SMatrix<f64, 2, NQ>;

/// One body-frame vector rotated by the absolute angle selected by `mask`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub body: Vector2<f64>,
    pub mask: u16,
}

/// A kinematic chain from the base origin to a point, at most two segments.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Chain {
    segs: [Segment; 2],
    n: usize,
}

impl Chain {
    fn one(body: Vector2<f64>, mask: u16) -> Self {
        Chain {
            segs: [Segment { body, mask }; 2],
            n: 1,
        }
    }

    fn two(a: (Vector2<f64>, u16), b: (Vector2<f64>, u16)) -> Self {
        Chain {
            segs: [
                Segment {
                    body: a.0,
                    mask: a.1,
                },
                Segment {
                    body: b.0,
                    mask: b.1,
                },
            ],
            n: 2,
        }
    }

    pub fn segs(&self) -> &[Segment] {
        &self.segs[..self.n]
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LinkDef {
    pub mass: f64,
    pub inertia: f64,
    /// Chain from base origin to the link CoM.
    pub com_chain: Chain,
    /// Coordinates summing to the link's absolute angle.
    pub angle_mask: u16,
}

fn mask_sum(mask: u16, v: &GenVec) -> f64 {
    let mut s = 0.0;
    for i in 0..NQ {
        if mask & (1 << i) != 0 {
            s += v[i];
        }
    }
    s
}

fn rot(theta: f64, b: Vector2<f64>) -> Vector2<f64> {
    let (s, c) = theta.sin_cos();
    Vector2::new(b.x * c - b.y * s, b.x * s + b.y * c)
}

fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

/// Builds the link table for a model. Hips and shoulders are shared
/// attachment points: both hips at the base origin, both shoulders at the
/// torso tip.
pub(crate) fn link_table(spec: &ModelSpec) -> [LinkDef; N_LINKS] {
    let up = |d: f64| Vector2::new(0.0, d);
    let down = |d: f64| Vector2::new(0.0, -d);
    let torso_tip = (up(spec.torso.length), PITCH);
    let thigh_full = |m| (down(spec.thigh.length), m);
    let leg = |thigh_mask, shank_mask| {
        (
            LinkDef {
                mass: spec.thigh.mass,
                inertia: spec.thigh.inertia,
                com_chain: Chain::one(down(spec.thigh.com_offset), thigh_mask),
                angle_mask: thigh_mask,
            },
            LinkDef {
                mass: spec.shank.mass,
                inertia: spec.shank.inertia,
                com_chain: Chain::two(
                    thigh_full(thigh_mask),
                    (down(spec.shank.com_offset), shank_mask),
                ),
                angle_mask: shank_mask,
            },
        )
    };
    let arm = |mask| LinkDef {
        mass: spec.arm.mass,
        inertia: spec.arm.inertia,
        com_chain: Chain::two(torso_tip, (down(spec.arm.com_offset), mask)),
        angle_mask: mask,
    };
    let (lthigh, lshank) = leg(LTHIGH, LSHANK);
    let (rthigh, rshank) = leg(RTHIGH, RSHANK);
    [
        LinkDef {
            mass: spec.torso.mass,
            inertia: spec.torso.inertia,
            com_chain: Chain::one(up(spec.torso.com_offset), PITCH),
            angle_mask: PITCH,
        },
        lthigh,
        lshank,
        rthigh,
        rshank,
        arm(LARM),
        arm(RARM),
    ]
}

/// Chains from the base origin to the two foot points, [left, right].
pub(crate) fn foot_chains(spec: &ModelSpec) -> [Chain; 2] {
    let down = |d: f64| Vector2::new(0.0, -d);
    let leg = |thigh_mask, shank_mask| {
        Chain::two(
            (down(spec.thigh.length), thigh_mask),
            (down(spec.shank.length), shank_mask),
        )
    };
    [leg(LTHIGH, LSHANK), leg(RTHIGH, RSHANK)]
}

/// Chain to a point fixed in the base (torso) frame.
pub(crate) fn base_point_chain(body: Vector2<f64>) -> Chain {
    Chain::one(body, PITCH)
}

/// Chains from the base origin to the two knee points, [left, right].
pub(crate) fn knee_chains(spec: &ModelSpec) -> [Chain; 2] {
    let down = |d: f64| Vector2::new(0.0, -d);
    [
        Chain::one(down(spec.thigh.length), LTHIGH),
        Chain::one(down(spec.thigh.length), RTHIGH),
    ]
}

/// Position, velocity, Jacobian and Jacobian-rate product for one point.
#[derive(Debug, Clone)]
pub(crate) struct PointKin {
    pub pos: Vector2<f64>,
    pub vel: Vector2<f64>,
    pub jac: Jacobian2,
    /// J̇·q̇ — the point acceleration at zero generalized acceleration.
    pub jdot_qd: Vector2<f64>,
}

pub(crate) fn point_kin(chain: &Chain, q: &GenVec, qd: &GenVec) -> PointKin {
    let mut jac = Jacobian2::zeros();
    jac[(0, 0)] = 1.0;
    jac[(1, 1)] = 1.0;
    let mut pos = Vector2::new(q[0], q[1]);
    let mut jdot_qd = Vector2::zeros();
    for seg in chain.segs() {
        let theta = mask_sum(seg.mask, q);
        let rate = mask_sum(seg.mask, qd);
        let world = rot(theta, seg.body);
        pos += world;
        let tangent = perp(world);
        for i in 0..NQ {
            if seg.mask & (1 << i) != 0 {
                jac[(0, i)] += tangent.x;
                jac[(1, i)] += tangent.y;
            }
        }
        // d/dt(perp(R b))·θ̇ = −R b · θ̇²
        jdot_qd -= world * rate * rate;
    }
    let vel = jac * qd;
    PointKin {
        pos,
        vel,
        jac,
        jdot_qd,
    }
}

/// Absolute angular rate of a link.
pub(crate) fn link_rate(def: &LinkDef, qd: &GenVec) -> f64 {
    mask_sum(def.angle_mask, qd)
}

/// Unit generalized vector selecting a link's angular coordinates.
pub(crate) fn angle_selector(def: &LinkDef) -> GenVec {
    let mut w = GenVec::zeros();
    for i in 0..NQ {
        if def.angle_mask & (1 << i) != 0 {
            w[i] = 1.0;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zero_q() -> (GenVec, GenVec) {
        (GenVec::zeros(), GenVec::zeros())
    }

    #[test]
    fn foot_below_base_in_neutral_pose() {
        let spec = ModelSpec::default();
        let (q, qd) = zero_q();
        for chain in foot_chains(&spec) {
            let k = point_kin(&chain, &q, &qd);
            assert_relative_eq!(k.pos.x, 0.0, epsilon = 1e-12);
            assert_relative_eq!(
                k.pos.y,
                -(spec.thigh.length + spec.shank.length),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let spec = ModelSpec::default();
        let mut q = GenVec::zeros();
        let qd = GenVec::from_fn(|i, _| 0.1 * (i as f64 + 1.0));
        for i in 0..NQ {
            q[i] = 0.3 * (i as f64) - 0.7;
        }
        let eps = 1e-7;
        for chain in link_table(&spec).map(|l| l.com_chain) {
            let k = point_kin(&chain, &q, &qd);
            for i in 0..NQ {
                let mut qp = q;
                let mut qm = q;
                qp[i] += eps;
                qm[i] -= eps;
                let pp = point_kin(&chain, &qp, &qd).pos;
                let pm = point_kin(&chain, &qm, &qd).pos;
                let fd = (pp - pm) / (2.0 * eps);
                assert_relative_eq!(k.jac[(0, i)], fd.x, epsilon = 1e-6);
                assert_relative_eq!(k.jac[(1, i)], fd.y, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn jdot_qd_matches_velocity_differences() {
        // J̇q̇ must equal d/dt (J q̇) holding q̇ fixed, i.e. the point
        // acceleration along the current velocity field.
        let spec = ModelSpec::default();
        let mut q = GenVec::zeros();
        let qd = GenVec::from_fn(|i, _| 0.2 * (i as f64) - 0.5);
        for i in 0..NQ {
            q[i] = 0.1 * (i as f64 + 1.0);
        }
        let eps = 1e-7;
        for chain in link_table(&spec).map(|l| l.com_chain) {
            let k = point_kin(&chain, &q, &qd);
            let qp = q + qd * eps;
            let qm = q - qd * eps;
            let vp = point_kin(&chain, &qp, &qd).vel;
            let vm = point_kin(&chain, &qm, &qd).vel;
            let fd = (vp - vm) / (2.0 * eps);
            assert_relative_eq!(k.jdot_qd.x, fd.x, epsilon = 1e-5);
            assert_relative_eq!(k.jdot_qd.y, fd.y, epsilon = 1e-5);
        }
    }
}
