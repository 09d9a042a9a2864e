//! Agent-based simulation of rod-shaped bacteria that grow, divide, push
//! each other around, and pass plasmids through pili.

pub mod cells;
pub mod circuit;
pub mod conjugation;
pub mod physics;
pub mod metrics;
pub mod snapshot;
pub mod world;
