//! Narrow-phase tests for capsule–capsule and capsule–wall pairs.

use serde::{Deserialize, Serialize};

use super::body::CapsuleBody;
use super::broadphase::SpatialGrid;
use super::vec2::{Rect, Vec2};

/// Static, one-sided wall segment. Free space lies to the left of `a → b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Vec2,
    pub b: Vec2,
}

impl Wall {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Wall { a, b }
    }

    /// Unit normal pointing into free space.
    pub fn normal(&self) -> Vec2 {
        (self.b - self.a).perp().try_normalize().unwrap_or(Vec2::Y)
    }

    pub fn aabb(&self) -> Rect {
        Rect {
            min: self.a.min(self.b),
            max: self.a.max(self.b),
        }
    }
}

/// What the second participant of a contact is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactTarget {
    Body(usize),
    Wall(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub body_a: usize,
    pub body_b: ContactTarget,
    /// Unit normal pointing from `body_a` toward `body_b`.
    pub normal: Vec2,
    pub penetration_depth: f64,
    pub contact_point: Vec2,
}

/// Closest points between segments `p1q1` and `p2q2`.
///
/// Returns the parameters `(s, t)` along each segment. Near-parallel
/// segments report the midpoint of their overlapping span so that rods
/// lying side by side get a centered contact.
pub fn closest_segment_params(p1: Vec2, q1: Vec2, p2: Vec2, q2: Vec2) -> (f64, f64) {
    const EPS: f64 = 1e-12;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.length_squared();
    let e = d2.length_squared();
    let f = d2.dot(r);
    if a <= EPS && e <= EPS {
        return (0.0, 0.0);
    }
    if a <= EPS {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = d1.dot(r);
    if e <= EPS {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }
    let b = d1.dot(d2);
    let denom = a * e - b * b;
    let s = if denom > 1e-9 * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        // Parallel: project the second segment onto the first and take the
        // middle of the overlap (or the nearest end when they do not overlap).
        let u0 = (p2 - p1).dot(d1) / a;
        let u1 = (q2 - p1).dot(d1) / a;
        let lo = u0.min(u1).max(0.0);
        let hi = u0.max(u1).min(1.0);
        if lo <= hi {
            0.5 * (lo + hi)
        } else if u0.max(u1) < 0.0 {
            0.0
        } else {
            1.0
        }
    };
    let mut t = (b * s + f) / e;
    let mut s = s;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

/// Contact between two capsules, if their surfaces overlap.
pub fn capsule_capsule(ia: usize, a: &CapsuleBody, ib: usize, b: &CapsuleBody) -> Option<Contact> {
    capsule_capsule_seg(ia, a, a.segment(), ib, b, b.segment())
}

/// Endpoints of a body's axis, as returned by [`CapsuleBody::segment`].
pub(crate) type Segment = (Vec2, Vec2);

pub(crate) fn segments(bodies: &[CapsuleBody], out: &mut Vec<Segment>) {
    out.clear();
    out.extend(bodies.iter().map(|b| b.segment()));
}

fn capsule_capsule_seg(ia: usize, a: &CapsuleBody, (p1, q1): Segment, ib: usize, b: &CapsuleBody, (p2, q2): Segment) -> Option<Contact> {
    let (s, t) = closest_segment_params(p1, q1, p2, q2);
    let ca = p1.lerp(q1, s);
    let cb = p2.lerp(q2, t);
    let delta = cb - ca;
    let dist = delta.length();
    let reach = a.radius + b.radius;
    if dist >= reach {
        return None;
    }
    let normal = if dist > 1e-12 {
        delta / dist
    } else {
        // Axes touch or cross: separate along the line between centers.
        (b.center - a.center).try_normalize().unwrap_or_else(|| a.axis().perp())
    };
    let depth = reach - dist;
    Some(Contact {
        body_a: ia,
        body_b: ContactTarget::Body(ib),
        normal,
        penetration_depth: depth,
        contact_point: ca + normal * (a.radius - 0.5 * depth),
    })
}

/// Contact between a capsule and a one-sided wall.
pub fn capsule_wall(ia: usize, a: &CapsuleBody, iw: usize, wall: &Wall) -> Option<Contact> {
    capsule_wall_seg(ia, a, a.segment(), iw, wall)
}

fn capsule_wall_seg(ia: usize, a: &CapsuleBody, (p1, q1): Segment, iw: usize, wall: &Wall) -> Option<Contact> {
    let (s, t) = closest_segment_params(p1, q1, wall.a, wall.b);
    let cb = p1.lerp(q1, s);
    let cw = wall.a.lerp(wall.b, t);
    let n_wall = wall.normal();
    let delta = cb - cw;
    let dist = delta.length();
    let interior = t > 1e-9 && t < 1.0 - 1e-9;
    let behind = -delta.dot(n_wall);
    let through = dist <= 1e-12 || (interior && behind > 0.0 && behind <= a.radius);
    if through {
        // The axis has crossed the wall line: measure from the deepest pole.
        let back = [p1, q1]
            .iter()
            .map(|p| -(*p - wall.a).dot(n_wall))
            .fold(0.0_f64, f64::max);
        let depth = a.radius + back;
        let deepest = if -(p1 - wall.a).dot(n_wall) >= -(q1 - wall.a).dot(n_wall) {
            p1
        } else {
            q1
        };
        return Some(Contact {
            body_a: ia,
            body_b: ContactTarget::Wall(iw),
            normal: -n_wall,
            penetration_depth: depth,
            contact_point: deepest - n_wall * (a.radius - 0.5 * depth),
        });
    }
    if dist >= a.radius {
        return None;
    }
    let normal = -delta / dist;
    let depth = a.radius - dist;
    Some(Contact {
        body_a: ia,
        body_b: ContactTarget::Wall(iw),
        normal,
        penetration_depth: depth,
        contact_point: cb + normal * (a.radius - 0.5 * depth),
    })
}

/// One point of a solver manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct ManifoldPoint {
    pub point: Vec2,
    pub normal: Vec2,
    pub depth: f64,
}

/// Sine of the angle below which two segments count as lying along each other.
const PARALLEL_SINE: f64 = 0.2;

/// Solver points for a detected contact. Rods lying along each other or along
/// a wall get one point at each end of their shared span so that the push
/// does not just spin them about a single end contact.
pub(crate) fn manifold(c: &Contact, bodies: &[CapsuleBody], segs: &[Segment], walls: &[Wall]) -> ([ManifoldPoint; 2], usize) {
    let single = ManifoldPoint {
        point: c.contact_point,
        normal: c.normal,
        depth: c.penetration_depth,
    };
    let mut out = [single; 2];
    let a = &bodies[c.body_a];
    let (p1, q1) = segs[c.body_a];
    let d1 = q1 - p1;
    let len1 = d1.length();
    if len1 <= 1e-9 {
        return (out, 1);
    }
    let mut n = 0;
    match c.body_b {
        ContactTarget::Body(j) => {
            let b = &bodies[j];
            let (p2, q2) = segs[j];
            let d2 = q2 - p2;
            let len2 = d2.length();
            if len2 <= 1e-9 || d1.cross(d2).abs() > PARALLEL_SINE * len1 * len2 {
                return (out, 1);
            }
            let u0 = (p2 - p1).dot(d1) / (len1 * len1);
            let u1 = (q2 - p1).dot(d1) / (len1 * len1);
            let lo = u0.min(u1).max(0.0);
            let hi = u0.max(u1).min(1.0);
            if (hi - lo) * len1 <= 1e-6 {
                return (out, 1);
            }
            let reach = a.radius + b.radius;
            for u in [lo, hi] {
                let pa = p1.lerp(q1, u);
                let t = ((pa - p2).dot(d2) / (len2 * len2)).clamp(0.0, 1.0);
                let delta = p2.lerp(q2, t) - pa;
                let dist = delta.length();
                if dist >= reach || dist <= 1e-12 {
                    continue;
                }
                let normal = delta / dist;
                let depth = reach - dist;
                out[n] = ManifoldPoint {
                    point: pa + normal * (a.radius - 0.5 * depth),
                    normal,
                    depth,
                };
                n += 1;
            }
        }
        ContactTarget::Wall(w) => {
            let wall = &walls[w];
            let dw = wall.b - wall.a;
            let lw = dw.length();
            // only points on the free side; the crossing case keeps its single push
            if lw <= 1e-9 || c.normal.dot(wall.normal()) > -0.999 || d1.cross(dw).abs() > PARALLEL_SINE * len1 * lw {
                return (out, 1);
            }
            let n_wall = wall.normal();
            for pole in [p1, q1] {
                let t = (pole - wall.a).dot(dw) / (lw * lw);
                let h = (pole - wall.a).dot(n_wall);
                if !(0.0..=1.0).contains(&t) || h <= 0.0 || h >= a.radius {
                    continue;
                }
                let depth = a.radius - h;
                out[n] = ManifoldPoint {
                    point: pole - n_wall * (a.radius - 0.5 * depth),
                    normal: -n_wall,
                    depth,
                };
                n += 1;
            }
        }
    }
    if n < 2 {
        out[0] = single;
        return (out, 1);
    }
    (out, 2)
}

/// Largest bounding diameter over a body set, the broadphase cell size.
pub fn max_bounding_diameter(bodies: &[CapsuleBody]) -> f64 {
    bodies
        .iter()
        .map(|b| 2.0 * b.bounding_radius())
        .fold(0.0, f64::max)
}

/// Candidate body pairs (i < j) whose bounding boxes, inflated by `margin`,
/// overlap. Pair order is deterministic.
pub fn candidate_pairs(bodies: &[CapsuleBody], margin: f64, grid: &mut SpatialGrid, out: &mut Vec<(usize, usize)>) {
    out.clear();
    if bodies.len() < 2 {
        return;
    }
    let cell = max_bounding_diameter(bodies) + margin;
    grid.rebuild(bodies.iter().map(|b| b.center), cell);
    let boxes: Vec<Rect> = bodies.iter().map(|b| b.aabb().inflate(0.5 * margin)).collect();
    for i in 0..bodies.len() {
        grid.for_each_neighbor(i, |j| {
            if j > i && boxes[i].intersects(&boxes[j]) {
                out.push((i, j));
            }
        });
    }
}

/// Candidate (body, wall) pairs by bounding-box overlap.
pub fn candidate_wall_pairs(bodies: &[CapsuleBody], walls: &[Wall], margin: f64, out: &mut Vec<(usize, usize)>) {
    out.clear();
    if walls.is_empty() {
        return;
    }
    let wall_boxes: Vec<Rect> = walls.iter().map(|w| w.aabb().inflate(0.5 * margin)).collect();
    for (i, b) in bodies.iter().enumerate() {
        let bb = b.aabb().inflate(0.5 * margin);
        for (w, wb) in wall_boxes.iter().enumerate() {
            if bb.intersects(wb) {
                out.push((i, w));
            }
        }
    }
}

/// All contacts among `bodies` and between bodies and `walls`.
///
/// Body pairs come first in ascending `(a, b)` order of discovery through the
/// spatial hash, then wall contacts in ascending body order.
pub fn detect_contacts(bodies: &[CapsuleBody], walls: &[Wall]) -> Vec<Contact> {
    let mut grid = SpatialGrid::default();
    let mut pairs = Vec::new();
    let mut wall_pairs = Vec::new();
    candidate_pairs(bodies, 0.0, &mut grid, &mut pairs);
    candidate_wall_pairs(bodies, walls, 0.0, &mut wall_pairs);
    let mut segs = Vec::new();
    segments(bodies, &mut segs);
    let mut out = Vec::new();
    narrow_phase(bodies, &segs, walls, &pairs, &wall_pairs, &mut out);
    out
}

pub(crate) fn narrow_phase(
    bodies: &[CapsuleBody],
    segs: &[Segment],
    walls: &[Wall],
    pairs: &[(usize, usize)],
    wall_pairs: &[(usize, usize)],
    out: &mut Vec<Contact>,
) {
    out.clear();
    for &(i, j) in pairs {
        if let Some(c) = capsule_capsule_seg(i, &bodies[i], segs[i], j, &bodies[j], segs[j]) {
            out.push(c);
        }
    }
    for &(i, w) in wall_pairs {
        if let Some(c) = capsule_wall_seg(i, &bodies[i], segs[i], w, &walls[w]) {
            out.push(c);
        }
    }
}

/// Distance between the surfaces of two capsules (negative when overlapping).
pub fn surface_distance(a: &CapsuleBody, b: &CapsuleBody) -> f64 {
    segment_gap(a.segment(), a.radius, b.segment(), b.radius)
}

/// [`surface_distance`] for precomputed axis segments.
pub fn segment_gap((p1, q1): (Vec2, Vec2), ra: f64, (p2, q2): (Vec2, Vec2), rb: f64) -> f64 {
    let (s, t) = closest_segment_params(p1, q1, p2, q2);
    p1.lerp(q1, s).distance(p2.lerp(q2, t)) - ra - rb
}
