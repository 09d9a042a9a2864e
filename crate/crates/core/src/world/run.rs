//! Driving a world to completion and streaming its output.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Event, Scenario, World, WorldError};
use crate::snapshot::{SnapshotHeader, SnapshotRecord};

/// Receives a run's output in order.
pub trait Sink {
    fn header(&mut self, header: &SnapshotHeader) -> std::io::Result<()>;
    fn snapshot(&mut self, record: &SnapshotRecord) -> std::io::Result<()>;
    fn events(&mut self, events: &[Event]) -> std::io::Result<()>;
    /// Called once when the run stops early; `reason` is human readable.
    fn abort(&mut self, reason: &str) -> std::io::Result<()>;
    /// Sees the world after seeding and after every completed iteration.
    fn observe(&mut self, _world: &World) {}
}

/// Discards everything.
pub struct NullSink;

impl Sink for NullSink {
    fn header(&mut self, _: &SnapshotHeader) -> std::io::Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _: &SnapshotRecord) -> std::io::Result<()> {
        Ok(())
    }
    fn events(&mut self, _: &[Event]) -> std::io::Result<()> {
        Ok(())
    }
    fn abort(&mut self, _: &str) -> std::io::Result<()> {
        Ok(())
    }
}

/// Keeps everything in memory.
#[derive(Default)]
pub struct MemorySink {
    pub header: Option<SnapshotHeader>,
    pub records: Vec<SnapshotRecord>,
    pub events: Vec<Event>,
    pub aborted: Option<String>,
}

impl Sink for MemorySink {
    fn header(&mut self, header: &SnapshotHeader) -> std::io::Result<()> {
        self.header = Some(header.clone());
        Ok(())
    }
    fn snapshot(&mut self, record: &SnapshotRecord) -> std::io::Result<()> {
        self.records.push(record.clone());
        Ok(())
    }
    fn events(&mut self, events: &[Event]) -> std::io::Result<()> {
        self.events.extend_from_slice(events);
        Ok(())
    }
    fn abort(&mut self, reason: &str) -> std::io::Result<()> {
        self.aborted = Some(reason.to_string());
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("output failed: {0}")]
    Sink(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    PopulationCap,
}

/// Totals for one finished run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub replicate: u64,
    pub seed: u64,
    pub iterations: u64,
    pub minutes: f64,
    pub stop: StopReason,
    pub donors: usize,
    pub recipients: usize,
    pub transconjugants: usize,
    /// `T / (R + T)`, absent when there are no recipient-lineage cells.
    pub y: Option<f64>,
    pub totals: super::Totals,
    pub first_transfer_minutes: Option<f64>,
    /// Not written to artifacts so that outputs stay reproducible.
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl RunSummary {
    fn of(world: &World, replicate: u64, seed: u64, stop: StopReason, wall: f64) -> Self {
        let [d, r, t] = world.counts();
        RunSummary {
            scenario: world.name.clone(),
            replicate,
            seed,
            iterations: world.iteration,
            minutes: world.minutes(),
            stop,
            donors: d,
            recipients: r,
            transconjugants: t,
            y: if r + t > 0 { Some(t as f64 / (r + t) as f64) } else { None },
            totals: world.totals.clone(),
            first_transfer_minutes: world
                .totals
                .first_transfer_iteration
                .map(|it| crate::cells::minutes(it, &world.params.growth)),
            wall_clock_s: wall,
        }
    }
}

/// Step a fresh world for `scenario` until its duration elapses or the
/// population cap is exceeded, streaming snapshots every
/// `scenario.snapshot_every` iterations plus the initial and final states.
pub fn run(scenario: &Scenario, replicate: u64, sink: &mut dyn Sink) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let mut world = World::new(scenario, replicate);
    run_world(&mut world, scenario, replicate, sink)?;
    let stop = if world.iteration < scenario.total_iterations() {
        StopReason::PopulationCap
    } else {
        StopReason::Completed
    };
    Ok(RunSummary::of(&world, replicate, scenario.rng_seed, stop, start.elapsed().as_secs_f64()))
}

/// Like [`run`] on an existing world, for callers that need the final state.
pub fn run_world(world: &mut World, scenario: &Scenario, replicate: u64, sink: &mut dyn Sink) -> Result<(), RunError> {
    let total = scenario.total_iterations();
    let every = scenario.snapshot_every.max(1);
    sink.header(&SnapshotHeader::for_world(world, replicate, scenario.rng_seed))?;
    sink.snapshot(&SnapshotRecord::capture(world))?;
    sink.observe(world);
    let mut last = world.iteration;
    while world.iteration < total {
        if world.cells.len() > world.params.population_cap {
            sink.abort(&format!("population {} exceeded the cap of {}", world.cells.len(), world.params.population_cap))?;
            break;
        }
        if let Err(e) = world.step() {
            // leave a diagnostic picture of the failing state behind
            let _ = sink.snapshot(&SnapshotRecord::capture(world));
            let _ = sink.abort(&e.to_string());
            return Err(e.into());
        }
        sink.events(&world.events)?;
        sink.observe(world);
        if world.iteration % every == 0 || world.iteration == total {
            sink.snapshot(&SnapshotRecord::capture(world))?;
            last = world.iteration;
        }
    }
    if last != world.iteration {
        sink.snapshot(&SnapshotRecord::capture(world))?;
    }
    Ok(())
}
