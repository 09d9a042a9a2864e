use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::vec2::{Rect, Vec2};

/// A rod with hemispherical caps.
///
/// `half_length` is the distance from the center to either cap center and
/// excludes the radius, so the tip-to-tip length is `2 * (half_length + radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapsuleBody {
    pub center: Vec2,
    pub angle: f64,
    pub half_length: f64,
    pub radius: f64,
    /// Lattice squares per iteration.
    pub linear_velocity: Vec2,
    /// Radians per iteration.
    pub angular_velocity: f64,
    pub mass: f64,
    pub moment: f64,
    pub friction: f64,
}

impl CapsuleBody {
    pub fn new(center: Vec2, angle: f64, half_length: f64, radius: f64, mass: f64, friction: f64) -> Self {
        let mut body = CapsuleBody {
            center,
            angle,
            half_length,
            radius,
            linear_velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            mass,
            moment: 0.0,
            friction,
        };
        body.update_moment();
        body
    }

    /// Unit vector along the long axis.
    #[inline]
    pub fn axis(&self) -> Vec2 {
        Vec2::from_angle(self.angle)
    }

    /// The two cap centers, `(center - axis*h, center + axis*h)`.
    #[inline]
    pub fn segment(&self) -> (Vec2, Vec2) {
        let d = self.axis() * self.half_length;
        (self.center - d, self.center + d)
    }

    /// Cap center on the given pole: `+1` forward, `-1` backward.
    #[inline]
    pub fn pole(&self, sign: f64) -> Vec2 {
        self.center + self.axis() * (sign * self.half_length)
    }

    /// Radius of the circle around `center` that encloses the capsule.
    #[inline]
    pub fn bounding_radius(&self) -> f64 {
        self.half_length + self.radius
    }

    pub fn aabb(&self) -> Rect {
        let (a, b) = self.segment();
        Rect {
            min: a.min(b) - Vec2::new(self.radius, self.radius),
            max: a.max(b) + Vec2::new(self.radius, self.radius),
        }
    }

    pub fn area(&self) -> f64 {
        capsule_area(self.half_length, self.radius)
    }

    /// Recompute `moment` for the current shape, treating the mass as
    /// uniformly spread over the capsule area.
    pub fn update_moment(&mut self) {
        self.moment = capsule_moment(self.mass, self.half_length, self.radius);
    }

    pub fn set_half_length(&mut self, half_length: f64) {
        self.half_length = half_length;
        self.update_moment();
    }

    #[inline]
    pub fn inverse_mass(&self) -> f64 {
        if self.mass > 0.0 {
            1.0 / self.mass
        } else {
            0.0
        }
    }

    #[inline]
    pub fn inverse_moment(&self) -> f64 {
        if self.moment > 0.0 {
            1.0 / self.moment
        } else {
            0.0
        }
    }

    /// Velocity of the material point at world position `p`.
    #[inline]
    pub fn velocity_at(&self, p: Vec2) -> Vec2 {
        self.linear_velocity + Vec2::cross_scalar(self.angular_velocity, p - self.center)
    }

    /// Map a body-local point to world coordinates.
    #[inline]
    pub fn local_to_world(&self, local: Vec2) -> Vec2 {
        self.center + local.rotate(self.angle)
    }

    pub fn is_valid(&self) -> bool {
        self.center.is_finite()
            && self.angle.is_finite()
            && self.linear_velocity.is_finite()
            && self.angular_velocity.is_finite()
            && self.half_length >= 0.0
            && self.radius > 0.0
    }
}

pub fn capsule_area(half_length: f64, radius: f64) -> f64 {
    4.0 * half_length * radius + PI * radius * radius
}

/// Moment of inertia about the center of a uniform-density capsule.
pub fn capsule_moment(mass: f64, half_length: f64, radius: f64) -> f64 {
    let area = capsule_area(half_length, radius);
    if area <= 0.0 || mass <= 0.0 {
        return 0.0;
    }
    let m_rect = mass * 4.0 * half_length * radius / area;
    let m_caps = mass - m_rect;
    let len = 2.0 * half_length;
    let width = 2.0 * radius;
    let i_rect = m_rect * (len * len + width * width) / 12.0;
    // Each cap is a half disc; shift its centroidal moment out to the pole.
    let m_half = 0.5 * m_caps;
    let centroid = 4.0 * radius / (3.0 * PI);
    let i_centroid = m_half * radius * radius / 2.0 - m_half * centroid * centroid;
    let d = half_length + centroid;
    let i_caps = 2.0 * (i_centroid + m_half * d * d);
    i_rect + i_caps
}
