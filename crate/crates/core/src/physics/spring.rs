use serde::{Deserialize, Serialize};

use super::body::CapsuleBody;
use super::vec2::Vec2;

/// Damped spring between anchor points fixed in two body frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampedSpring {
    pub body_a: usize,
    pub body_b: usize,
    /// Anchor in `body_a`'s local frame (x along the rod axis).
    pub anchor_a: Vec2,
    pub anchor_b: Vec2,
    pub rest_length: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl DampedSpring {
    /// Force applied to `body_b` at its anchor; `body_a` receives the negation.
    pub fn force(&self, a: &CapsuleBody, b: &CapsuleBody) -> Vec2 {
        let pa = a.local_to_world(self.anchor_a);
        let pb = b.local_to_world(self.anchor_b);
        let delta = pb - pa;
        let len = delta.length();
        let Some(dir) = delta.try_normalize() else {
            return Vec2::ZERO;
        };
        let extension = len - self.rest_length;
        let rel = b.velocity_at(pb) - a.velocity_at(pa);
        let magnitude = -self.stiffness * extension - self.damping * rel.dot(dir);
        dir * magnitude
    }

    pub fn current_length(&self, a: &CapsuleBody, b: &CapsuleBody) -> f64 {
        a.local_to_world(self.anchor_a).distance(b.local_to_world(self.anchor_b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hooke_force_is_equal_and_opposite() {
        let a = CapsuleBody::new(Vec2::new(0.0, 0.0), 0.0, 5.0, 2.5, 1.0, 0.0);
        let b = CapsuleBody::new(Vec2::new(20.0, 0.0), 0.0, 5.0, 2.5, 1.0, 0.0);
        let spring = DampedSpring {
            body_a: 0,
            body_b: 1,
            anchor_a: Vec2::new(5.0, 0.0),
            anchor_b: Vec2::new(-5.0, 0.0),
            rest_length: 4.0,
            stiffness: 0.3,
            damping: 0.1,
        };
        // anchors 10 apart, rest 4: extension 6, pulls b toward a
        let f = spring.force(&a, &b);
        assert!((f.x + 0.3 * 6.0).abs() < 1e-12);
        assert!(f.y.abs() < 1e-12);
        let reversed = DampedSpring {
            body_a: 1,
            body_b: 0,
            anchor_a: spring.anchor_b,
            anchor_b: spring.anchor_a,
            ..spring.clone()
        };
        let g = reversed.force(&b, &a);
        assert!((f + g).length() < 1e-12);
    }
}
