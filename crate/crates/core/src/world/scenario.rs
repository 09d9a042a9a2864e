//! Validated scenario descriptions: layout, seeded strains, parameters and
//! scheduled interventions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::{GeometrySpec, WorldGeometry};
use crate::cells::{GrowthParams, Role};
use crate::circuit::{NoProgram, Oscillator, OscillatorParams, Program, ProgramClock};
use crate::conjugation::ConjugationParams;
use crate::physics::{Rect, SolverParams, Vec2};

/// Which intracellular program plasmid carriers run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CircuitSpec {
    #[default]
    None,
    Oscillator(OscillatorParams),
}

impl CircuitSpec {
    pub fn program(&self) -> Arc<dyn Program> {
        match self {
            CircuitSpec::None => Arc::new(NoProgram),
            CircuitSpec::Oscillator(p) => Arc::new(Oscillator::new(p.clone())),
        }
    }

    pub fn network_steps(&self) -> u32 {
        match self {
            CircuitSpec::None => 0,
            CircuitSpec::Oscillator(p) => p.network_steps,
        }
    }
}

/// Everything that tunes a run apart from layout and seeding.
#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    pub growth: GrowthParams,
    pub conjugation: ConjugationParams,
    pub solver: SolverParams,
    pub circuit: CircuitSpec,
    /// Stop the run once the population exceeds this.
    pub population_cap: usize,
    /// Physics-only iterations after a manual mix.
    pub relaxation_iterations: u32,
    /// Emit a marker event at the start of every phase of every iteration.
    pub record_phases: bool,
    /// Keep `World::strain_contacts` up to date.
    pub track_strain_contacts: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            growth: GrowthParams::default(),
            conjugation: ConjugationParams::default(),
            solver: SolverParams::default(),
            circuit: CircuitSpec::None,
            population_cap: 20_000,
            relaxation_iterations: 50,
            record_phases: false,
            track_strain_contacts: false,
        }
    }
}

impl SimParams {
    pub fn clock(&self) -> ProgramClock {
        ProgramClock::new(self.circuit.network_steps(), self.growth.gt)
    }
}

/// How seeded cells are laid out inside their region.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrangement {
    /// Uniform over the region.
    #[default]
    Uniform,
    /// Triangular density along the region's long side, peaking at its
    /// middle; uniform across.
    CenterWeighted,
    /// A compact disc around the region center.
    Centered,
    /// The poses listed in the seed.
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub center: Vec2,
    pub angle: f64,
}

/// A group of identical founder cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrainSeed {
    #[serde(with = "role_name")]
    pub role: Role,
    #[serde(default)]
    pub strain: u32,
    /// Defaults to `number_donors` or `number_recipients` by role.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Defaults to the first growth region of the layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Rect>,
    #[serde(default)]
    pub arrangement: Arrangement,
    /// Fixed orientation in radians; random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub poses: Vec<Pose>,
    /// Starting molecule levels; the program's initial state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_initial: Option<Vec<f64>>,
}

impl StrainSeed {
    pub fn new(role: Role, strain: u32, count: usize, region: Rect, arrangement: Arrangement) -> Self {
        StrainSeed {
            role,
            strain,
            count: Some(count),
            region: Some(region),
            arrangement,
            angle: None,
            poses: Vec::new(),
            program_initial: None,
        }
    }
}

pub(crate) mod role_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::cells::Role;

    pub fn serialize<S: Serializer>(role: &Role, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(role.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Role, D::Error> {
        let name = String::deserialize(d)?;
        match name.as_str() {
            "donor" => Ok(Role::Donor),
            "recipient" => Ok(Role::Recipient),
            "transconjugant" => Ok(Role::Transconjugant),
            other => Err(serde::de::Error::custom(format!(
                "unknown role `{other}`, expected donor, recipient or transconjugant"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    ManualMix,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intervention {
    pub kind: InterventionKind,
    pub at_minutes: f64,
}

/// A runnable experiment.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub geometry_spec: GeometrySpec,
    pub geometry: WorldGeometry,
    /// Seeds with counts and regions resolved.
    pub seeds: Vec<StrainSeed>,
    pub params: SimParams,
    pub interventions: Vec<Intervention>,
    pub duration_min: f64,
    pub rng_seed: u64,
    /// Snapshot cadence in iterations.
    pub snapshot_every: u64,
}

impl Scenario {
    pub fn total_iterations(&self) -> u64 {
        crate::cells::iteration_at(self.duration_min, &self.params.growth)
    }

    pub fn intervention_iterations(&self) -> Vec<(u64, InterventionKind)> {
        let mut out: Vec<_> = self
            .interventions
            .iter()
            .map(|i| (crate::cells::iteration_at(i.at_minutes, &self.params.growth), i.kind))
            .collect();
        out.sort_by_key(|(it, _)| *it);
        out
    }
}
