//! Line-delimited JSON snapshot streams.
//!
//! A stream starts with one [`SnapshotHeader`] line, followed by one
//! [`SnapshotRecord`] per sampled iteration. A run that stopped on an error
//! ends with a `{"partial":true,...}` marker line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{CellId, Role};
use crate::physics::{CapsuleBody, Vec2};
use crate::world::{World, WorldGeometry};

pub const SNAPSHOT_FORMAT: &str = "pilus-snapshot";
pub const EVENTS_FORMAT: &str = "pilus-events";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub scenario: String,
    pub replicate: u64,
    pub seed: u64,
    #[serde(rename = "Gt")]
    pub gt: u32,
    #[serde(rename = "real_Gt")]
    pub real_gt: f64,
    pub width: f64,
    pub contact_radius: f64,
    pub program: String,
    pub geometry: WorldGeometry,
}

impl SnapshotHeader {
    pub fn for_world(world: &World, replicate: u64, seed: u64) -> Self {
        SnapshotHeader {
            format: SNAPSHOT_FORMAT.into(),
            version: FORMAT_VERSION,
            scenario: world.name.clone(),
            replicate,
            seed,
            gt: world.params.growth.gt,
            real_gt: world.params.growth.real_gt,
            width: world.params.growth.width,
            contact_radius: world.params.conjugation.contact_radius,
            program: world.program().name().into(),
            geometry: world.geometry.clone(),
        }
    }

    pub fn minutes(&self, iteration: u64) -> f64 {
        iteration as f64 * self.real_gt / self.gt as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: CellId,
    pub strain: u32,
    pub center: Vec2,
    pub angle: f64,
    pub half_length: f64,
    pub radius: f64,
    pub velocity: Vec2,
    pub role: Role,
    pub conjugating: bool,
    pub program_readout: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub program: Vec<f64>,
}

impl CellRecord {
    /// Rigid body with this record's pose; mass and friction are nominal.
    pub fn body(&self) -> CapsuleBody {
        let mut b = CapsuleBody::new(self.center, self.angle, self.half_length, self.radius, 1.0, 0.0);
        b.linear_velocity = self.velocity;
        b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpringRecord {
    pub giver: CellId,
    pub receiver: CellId,
    pub remaining: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub iteration: u64,
    pub minutes: f64,
    pub cells: Vec<CellRecord>,
    pub springs: Vec<SpringRecord>,
}

impl SnapshotRecord {
    pub fn capture(world: &World) -> Self {
        let program = world.program();
        SnapshotRecord {
            iteration: world.iteration,
            minutes: world.minutes(),
            cells: world
                .cells
                .iter()
                .map(|c| CellRecord {
                    id: c.id,
                    strain: c.strain,
                    center: c.body.center,
                    angle: c.body.angle,
                    half_length: c.body.half_length,
                    radius: c.body.radius,
                    velocity: c.body.linear_velocity,
                    role: c.role,
                    conjugating: c.conjugating,
                    program_readout: if c.plasmid { program.reporter(&c.program) } else { 0.0 },
                    program: c.program.molecules.clone(),
                })
                .collect(),
            springs: world
                .springs
                .iter()
                .map(|s| SpringRecord {
                    giver: s.giver,
                    receiver: s.receiver,
                    remaining: s.remaining,
                })
                .collect(),
        }
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut n = [0; 3];
        for c in &self.cells {
            n[c.role as usize] += 1;
        }
        n
    }
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty snapshot stream")]
    Empty,
    #[error("unsupported stream format `{format}` version {version}")]
    Format { format: String, version: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialMarker {
    pub partial: bool,
    pub reason: String,
}

/// A fully read stream.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotStream {
    pub header: SnapshotHeader,
    pub records: Vec<SnapshotRecord>,
    pub partial: Option<String>,
}

pub fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

pub fn read_stream<R: BufRead>(input: R) -> Result<SnapshotStream, SnapshotError> {
    let mut lines = input.lines().enumerate();
    let header: SnapshotHeader = loop {
        match lines.next() {
            None => return Err(SnapshotError::Empty),
            Some((_, line)) if line.as_ref().map(|l| l.trim().is_empty()).unwrap_or(false) => continue,
            Some((n, line)) => {
                let line = line?;
                break serde_json::from_str(&line).map_err(|e| SnapshotError::Parse {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            }
        }
    };
    if header.format != SNAPSHOT_FORMAT || header.version != FORMAT_VERSION {
        return Err(SnapshotError::Format {
            format: header.format,
            version: header.version,
        });
    }
    let mut records = Vec::new();
    let mut partial = None;
    for (n, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| SnapshotError::Parse {
            line: n + 1,
            message: e.to_string(),
        };
        if text.starts_with("{\"partial\"") {
            let m: PartialMarker = serde_json::from_str(text).map_err(parse_err)?;
            partial = Some(m.reason);
            continue;
        }
        records.push(serde_json::from_str(text).map_err(parse_err)?);
    }
    Ok(SnapshotStream { header, records, partial })
}
