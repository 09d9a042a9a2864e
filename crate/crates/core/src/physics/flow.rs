use serde::{Deserialize, Serialize};

use super::vec2::{Rect, Vec2};

/// Prescribed acceleration field over part of the world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowField {
    /// Constant acceleration inside a rectangular strip.
    Uniform { region: Rect, acceleration: Vec2 },
    /// Solid-body rotation about `center`; positive strength is counter-clockwise.
    Vortex { region: Rect, center: Vec2, strength: f64 },
}

impl FlowField {
    pub fn region(&self) -> &Rect {
        match self {
            FlowField::Uniform { region, .. } | FlowField::Vortex { region, .. } => region,
        }
    }
}

/// Acceleration contributed by one field at `p`, zero outside its region.
pub fn interpolate_flow(field: &FlowField, p: Vec2) -> Vec2 {
    if !field.region().contains(p) {
        return Vec2::ZERO;
    }
    match field {
        FlowField::Uniform { acceleration, .. } => *acceleration,
        FlowField::Vortex { center, strength, .. } => (p - *center).perp() * *strength,
    }
}

/// Sum of all fields at `p`.
pub fn flow_at(fields: &[FlowField], p: Vec2) -> Vec2 {
    fields.iter().fold(Vec2::ZERO, |acc, f| acc + interpolate_flow(f, p))
}
