//! 2D capsule mechanics: contacts, springs, prescribed flow, and a
//! sequential-impulse solver with a bounded per-step budget.

pub mod body;
pub mod broadphase;
pub mod collision;
pub mod flow;
pub mod solver;
pub mod spring;
pub mod vec2;

pub use body::{capsule_area, capsule_moment, CapsuleBody};
pub use broadphase::SpatialGrid;
pub use collision::{capsule_capsule, capsule_wall, closest_segment_params, detect_contacts, segment_gap, surface_distance, Contact, ContactTarget, Wall};
pub use flow::{flow_at, interpolate_flow, FlowField};
pub use solver::{solve_step, PhysicsError, Solver, SolverParams};
pub use spring::DampedSpring;
pub use vec2::{Rect, Vec2};
