//! Sequential-impulse contact solver with a bounded iteration budget.
//!
//! Each call advances the bodies by one substep: external flow and spring
//! forces are applied to velocities, contacts are resolved with at most
//! `solver_iterations` Gauss–Seidel passes, and positions are integrated with
//! semi-implicit Euler. A small budget leaves residual overlap, which is how
//! crowded rods end up looking flexible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::body::CapsuleBody;
use super::broadphase::SpatialGrid;
use super::collision::{candidate_pairs, candidate_wall_pairs, manifold, narrow_phase, segments, Contact, ContactTarget, Segment, Wall};
use super::flow::{flow_at, FlowField};
use super::spring::DampedSpring;
use super::vec2::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("spring {spring} references body {body}, but only {count} bodies exist")]
    DanglingSpring { spring: usize, body: usize, count: usize },
    #[error("body {body} has a non-finite state after integration")]
    NonFinite { body: usize },
    #[error("invalid solver parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: &'static str },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    /// Substeps per world iteration (`pymunk_steps`).
    pub substeps_per_iteration: u32,
    /// Contact passes per substep.
    pub solver_iterations: u32,
    /// Baumgarte fraction of the penetration corrected per substep.
    pub position_correction_fraction: f64,
    /// Overlap left uncorrected by the position bias.
    pub penetration_slop: f64,
    /// Cap on the separating speed the position bias may request.
    pub max_correction_velocity: f64,
    /// Fraction of velocity kept after one iteration without contacts.
    pub velocity_damping: f64,
    /// Broadphase margin kept around bounding boxes so cached pairs stay
    /// valid for the post-solve overlap measurement.
    pub broadphase_margin: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            substeps_per_iteration: 1,
            solver_iterations: 10,
            position_correction_fraction: 0.2,
            penetration_slop: 0.05,
            max_correction_velocity: 2.0,
            velocity_damping: 0.1,
            broadphase_margin: 2.0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if self.substeps_per_iteration < 1 {
            return Err(PhysicsError::InvalidParams {
                field: "substeps_per_iteration",
                reason: "must be at least 1",
            });
        }
        if self.solver_iterations < 1 {
            return Err(PhysicsError::InvalidParams {
                field: "solver_iterations",
                reason: "must be at least 1",
            });
        }
        if !(self.position_correction_fraction > 0.0 && self.position_correction_fraction <= 1.0) {
            return Err(PhysicsError::InvalidParams {
                field: "position_correction_fraction",
                reason: "must lie in (0, 1]",
            });
        }
        if !(self.velocity_damping > 0.0 && self.velocity_damping <= 1.0) {
            return Err(PhysicsError::InvalidParams {
                field: "velocity_damping",
                reason: "must lie in (0, 1]",
            });
        }
        if !(self.penetration_slop >= 0.0) || !(self.max_correction_velocity > 0.0) || !(self.broadphase_margin >= 0.0) {
            return Err(PhysicsError::InvalidParams {
                field: "penetration_slop",
                reason: "slop and margin must be non-negative, correction velocity positive",
            });
        }
        Ok(())
    }

    pub fn substep_dt(&self) -> f64 {
        1.0 / self.substeps_per_iteration as f64
    }
}

#[derive(Clone, Copy, Debug)]
struct ContactConstraint {
    a: usize,
    b: Option<usize>,
    normal: Vec2,
    tangent: Vec2,
    ra: Vec2,
    rb: Vec2,
    normal_mass: f64,
    tangent_mass: f64,
    bias: f64,
    friction: f64,
    normal_impulse: f64,
    tangent_impulse: f64,
}

/// Reusable solver state. Scratch buffers persist between calls; results do
/// not depend on what was solved before.
#[derive(Debug, Default, Clone)]
pub struct Solver {
    pub params: SolverParams,
    grid: SpatialGrid,
    pairs: Vec<(usize, usize)>,
    wall_pairs: Vec<(usize, usize)>,
    contacts: Vec<Contact>,
    constraints: Vec<ContactConstraint>,
    segments: Vec<Segment>,
}

impl Solver {
    pub fn new(params: SolverParams) -> Self {
        Solver {
            params,
            ..Default::default()
        }
    }

    /// Contacts found at the start of the most recent substep, or after the
    /// last call to [`Solver::refresh_contacts`].
    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    /// Re-measure overlap for the cached candidate pairs on the current poses.
    pub fn refresh_contacts(&mut self, bodies: &[CapsuleBody], walls: &[Wall]) {
        if self.pairs.iter().any(|&(i, j)| i >= bodies.len() || j >= bodies.len())
            || self.wall_pairs.iter().any(|&(i, _)| i >= bodies.len())
        {
            self.detect(bodies, walls);
            return;
        }
        segments(bodies, &mut self.segments);
        narrow_phase(bodies, &self.segments, walls, &self.pairs, &self.wall_pairs, &mut self.contacts);
    }

    fn detect(&mut self, bodies: &[CapsuleBody], walls: &[Wall]) {
        let margin = self.params.broadphase_margin;
        candidate_pairs(bodies, margin, &mut self.grid, &mut self.pairs);
        candidate_wall_pairs(bodies, walls, margin, &mut self.wall_pairs);
        segments(bodies, &mut self.segments);
        narrow_phase(bodies, &self.segments, walls, &self.pairs, &self.wall_pairs, &mut self.contacts);
    }

    /// Advance all bodies by one substep.
    pub fn solve_step(
        &mut self,
        bodies: &mut [CapsuleBody],
        walls: &[Wall],
        springs: &[DampedSpring],
        flows: &[FlowField],
    ) -> Result<(), PhysicsError> {
        let n = bodies.len();
        for (k, s) in springs.iter().enumerate() {
            for body in [s.body_a, s.body_b] {
                if body >= n {
                    return Err(PhysicsError::DanglingSpring { spring: k, body, count: n });
                }
            }
        }
        let dt = self.params.substep_dt();
        let damp = self.params.velocity_damping.powf(dt);

        for b in bodies.iter_mut() {
            let accel = if flows.is_empty() { Vec2::ZERO } else { flow_at(flows, b.center) };
            b.linear_velocity = b.linear_velocity * damp + accel * dt;
            b.angular_velocity *= damp;
        }

        for s in springs {
            let (a, b) = (&bodies[s.body_a], &bodies[s.body_b]);
            let force = s.force(a, b);
            let pa = a.local_to_world(s.anchor_a);
            let pb = b.local_to_world(s.anchor_b);
            let impulse = force * dt;
            apply_impulse(&mut bodies[s.body_b], impulse, pb);
            apply_impulse(&mut bodies[s.body_a], -impulse, pa);
        }

        self.detect(bodies, walls);
        self.prepare(bodies, walls, dt);
        for _ in 0..self.params.solver_iterations {
            self.iterate(bodies);
        }

        for (i, b) in bodies.iter_mut().enumerate() {
            b.center += b.linear_velocity * dt;
            b.angle += b.angular_velocity * dt;
            if !b.is_valid() {
                return Err(PhysicsError::NonFinite { body: i });
            }
        }
        Ok(())
    }

    fn prepare(&mut self, bodies: &[CapsuleBody], walls: &[Wall], dt: f64) {
        self.constraints.clear();
        let beta = self.params.position_correction_fraction;
        let slop = self.params.penetration_slop;
        let max_bias = self.params.max_correction_velocity;
        for c in &self.contacts {
            let a = &bodies[c.body_a];
            let (b_index, b_body) = match c.body_b {
                ContactTarget::Body(j) => (Some(j), Some(&bodies[j])),
                ContactTarget::Wall(_) => (None, None),
            };
            let (points, count) = manifold(c, bodies, &self.segments, walls);
            for m in &points[..count] {
                let n = m.normal;
                let t = n.perp();
                let ra = m.point - a.center;
                let (rb, imb, iib, mu_b) = match b_body {
                    Some(b) => (m.point - b.center, b.inverse_mass(), b.inverse_moment(), b.friction),
                    None => (Vec2::ZERO, 0.0, 0.0, a.friction),
                };
                let ima = a.inverse_mass();
                let iia = a.inverse_moment();
                let rna = ra.cross(n);
                let rnb = rb.cross(n);
                let kn = ima + imb + iia * rna * rna + iib * rnb * rnb;
                let rta = ra.cross(t);
                let rtb = rb.cross(t);
                let kt = ima + imb + iia * rta * rta + iib * rtb * rtb;
                let bias = (beta / dt * (m.depth - slop).max(0.0)).min(max_bias);
                self.constraints.push(ContactConstraint {
                    a: c.body_a,
                    b: b_index,
                    normal: n,
                    tangent: t,
                    ra,
                    rb,
                    normal_mass: if kn > 0.0 { 1.0 / kn } else { 0.0 },
                    tangent_mass: if kt > 0.0 { 1.0 / kt } else { 0.0 },
                    bias,
                    friction: (a.friction * mu_b).max(0.0).sqrt(),
                    normal_impulse: 0.0,
                    tangent_impulse: 0.0,
                });
            }
        }
    }

    fn iterate(&mut self, bodies: &mut [CapsuleBody]) {
        for c in self.constraints.iter_mut() {
            let relative = |bodies: &[CapsuleBody], c: &ContactConstraint| {
                let a = &bodies[c.a];
                let va = a.linear_velocity + Vec2::cross_scalar(a.angular_velocity, c.ra);
                let vb = match c.b {
                    Some(j) => {
                        let b = &bodies[j];
                        b.linear_velocity + Vec2::cross_scalar(b.angular_velocity, c.rb)
                    }
                    None => Vec2::ZERO,
                };
                vb - va
            };

            // Friction first, bounded by the current normal impulse.
            let vt = relative(bodies, c).dot(c.tangent);
            let max_friction = c.friction * c.normal_impulse;
            let new_t = (c.tangent_impulse - c.tangent_mass * vt).clamp(-max_friction, max_friction);
            let dt_imp = new_t - c.tangent_impulse;
            c.tangent_impulse = new_t;
            apply_pair(bodies, c, c.tangent * dt_imp);

            let vn = relative(bodies, c).dot(c.normal);
            let new_n = (c.normal_impulse + c.normal_mass * (c.bias - vn)).max(0.0);
            let dn = new_n - c.normal_impulse;
            c.normal_impulse = new_n;
            apply_pair(bodies, c, c.normal * dn);
        }
    }
}

#[inline]
fn apply_pair(bodies: &mut [CapsuleBody], c: &ContactConstraint, impulse: Vec2) {
    {
        let a = &mut bodies[c.a];
        a.linear_velocity -= impulse * a.inverse_mass();
        a.angular_velocity -= a.inverse_moment() * c.ra.cross(impulse);
    }
    if let Some(j) = c.b {
        let b = &mut bodies[j];
        b.linear_velocity += impulse * b.inverse_mass();
        b.angular_velocity += b.inverse_moment() * c.rb.cross(impulse);
    }
}

#[inline]
fn apply_impulse(body: &mut CapsuleBody, impulse: Vec2, at: Vec2) {
    body.linear_velocity += impulse * body.inverse_mass();
    body.angular_velocity += body.inverse_moment() * (at - body.center).cross(impulse);
}

/// One substep with a fresh solver; see [`Solver::solve_step`].
pub fn solve_step(
    bodies: &mut [CapsuleBody],
    walls: &[Wall],
    springs: &[DampedSpring],
    params: &SolverParams,
) -> Result<(), PhysicsError> {
    Solver::new(params.clone()).solve_step(bodies, walls, springs, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::collision::detect_contacts;

    fn rod(x: f64, y: f64, angle: f64) -> CapsuleBody {
        CapsuleBody::new(Vec2::new(x, y), angle, 7.5, 2.5, 1.0, 0.5)
    }

    fn max_depth(bodies: &[CapsuleBody]) -> f64 {
        detect_contacts(bodies, &[])
            .iter()
            .map(|c| c.penetration_depth)
            .fold(0.0, f64::max)
    }

    #[test]
    fn free_body_moves_by_its_velocity() {
        let params = SolverParams {
            velocity_damping: 1.0,
            ..Default::default()
        };
        let mut bodies = vec![rod(0.0, 0.0, 0.0)];
        bodies[0].linear_velocity = Vec2::new(0.7, -0.2);
        solve_step(&mut bodies, &[], &[], &params).unwrap();
        assert!((bodies[0].center - Vec2::new(0.7, -0.2)).length() < 1e-12);
    }

    #[test]
    fn overlapping_pair_separates() {
        let mut bodies = vec![rod(0.0, 0.0, 0.0), rod(0.0, 3.0, 0.0)];
        let before = max_depth(&bodies);
        let params = SolverParams {
            solver_iterations: 50,
            ..Default::default()
        };
        solve_step(&mut bodies, &[], &[], &params).unwrap();
        assert!(max_depth(&bodies) < before);
    }

    #[test]
    fn dangling_spring_is_reported() {
        let mut bodies = vec![rod(0.0, 0.0, 0.0)];
        let spring = DampedSpring {
            body_a: 0,
            body_b: 3,
            anchor_a: Vec2::ZERO,
            anchor_b: Vec2::ZERO,
            rest_length: 1.0,
            stiffness: 1.0,
            damping: 0.0,
        };
        let err = solve_step(&mut bodies, &[], &[spring], &SolverParams::default()).unwrap_err();
        assert_eq!(err, PhysicsError::DanglingSpring { spring: 0, body: 3, count: 1 });
    }

    #[test]
    fn spring_impulse_is_hookean_and_balanced() {
        let params = SolverParams {
            velocity_damping: 1.0,
            ..Default::default()
        };
        let mut bodies = vec![rod(0.0, 0.0, 0.0), rod(30.0, 0.0, 0.0)];
        let spring = DampedSpring {
            body_a: 0,
            body_b: 1,
            anchor_a: Vec2::new(7.5, 0.0),
            anchor_b: Vec2::new(-7.5, 0.0),
            rest_length: 5.0,
            stiffness: 0.02,
            damping: 0.5,
        };
        solve_step(&mut bodies, &[], &[spring], &params).unwrap();
        // anchors 15 apart, extension 10: momentum change 0.2 per body
        assert!((bodies[0].linear_velocity.x - 0.2).abs() < 1e-12);
        assert!((bodies[1].linear_velocity.x + 0.2).abs() < 1e-12);
        let p = bodies[0].linear_velocity * bodies[0].mass + bodies[1].linear_velocity * bodies[1].mass;
        assert!(p.length() < 1e-12);
    }

    #[test]
    fn wall_keeps_body_in_free_space() {
        let walls = [Wall::new(Vec2::new(-100.0, 0.0), Vec2::new(100.0, 0.0))];
        let mut bodies = vec![rod(0.0, 4.0, 0.0)];
        bodies[0].linear_velocity = Vec2::new(0.0, -1.0);
        for _ in 0..50 {
            solve_step(&mut bodies, &walls, &[], &SolverParams::default()).unwrap();
        }
        assert!(bodies[0].center.y > 2.0);
    }
}
