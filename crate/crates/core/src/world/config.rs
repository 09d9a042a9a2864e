//! Scenario files. Keys follow the global parameter names of the original
//! tool (`Gt`, `real_Gt`, `p_d`, ...); unknown keys are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::{ChannelSpec, GeometrySpec};
use super::scenario::{Arrangement, CircuitSpec, Intervention, Scenario, SimParams, StrainSeed};
use crate::cells::{GrowthParams, Role};
use crate::conjugation::{ConjugationParams, TrialMode};
use crate::physics::{Rect, SolverParams, Vec2};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub duration_min: f64,
    /// Snapshot cadence in iterations.
    pub snapshot_every: u64,
    /// World size `[width, height]`; replaces the layout's bounds, centered
    /// on them, when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screenview: Option<[f64; 2]>,

    pub max_overlap: f64,
    pub width: f64,
    pub length: f64,
    pub growth_speed: u32,
    #[serde(rename = "Gt")]
    pub gt: u32,
    #[serde(rename = "real_Gt")]
    pub real_gt: f64,
    pub cell_infancy: f64,
    pub bac_mass: f64,
    pub bac_friction: f64,
    pub division_jitter: f64,
    pub pause_elongation_while_conjugating: bool,
    pub defer_division_while_conjugating: bool,

    pub p_d: f64,
    pub p_t1: f64,
    pub p_t2: f64,
    pub c_time: u32,
    pub contact_radius: f64,
    pub transconjugants_conjugate: bool,
    pub transconjugants_receive: bool,
    pub trial_mode: TrialMode,
    pub spring_rest_length: f64,
    pub spring_stiffness: f64,
    pub spring_damping: f64,

    pub network_steps: u32,
    pub number_donors: usize,
    pub number_recipients: usize,
    pub population_cap: usize,
    pub relaxation_iterations: u32,
    pub record_phases: bool,
    pub track_strain_contacts: bool,

    pub solver: SolverParams,
    pub circuit: CircuitSpec,
    pub geometry: GeometrySpec,
    pub seeds: Vec<StrainSeed>,
    pub interventions: Vec<Intervention>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let g = GrowthParams::default();
        let c = ConjugationParams::default();
        let s = SimParams::default();
        ScenarioConfig {
            name: "custom".into(),
            seed: 0,
            duration_min: 300.0,
            snapshot_every: 150,
            screenview: None,
            max_overlap: g.max_overlap,
            width: g.width,
            length: g.length,
            growth_speed: g.growth_speed,
            gt: g.gt,
            real_gt: g.real_gt,
            cell_infancy: g.cell_infancy,
            bac_mass: g.bac_mass,
            bac_friction: g.bac_friction,
            division_jitter: g.division_jitter,
            pause_elongation_while_conjugating: g.pause_elongation_while_conjugating,
            defer_division_while_conjugating: g.defer_division_while_conjugating,
            p_d: c.p_d,
            p_t1: c.p_t1,
            p_t2: c.p_t2,
            c_time: c.c_time,
            contact_radius: c.contact_radius,
            transconjugants_conjugate: c.transconjugants_conjugate,
            transconjugants_receive: c.transconjugants_receive,
            trial_mode: c.trial_mode,
            spring_rest_length: c.spring_rest_length,
            spring_stiffness: c.spring_stiffness,
            spring_damping: c.spring_damping,
            network_steps: 18,
            number_donors: 1,
            number_recipients: 1,
            population_cap: s.population_cap,
            relaxation_iterations: s.relaxation_iterations,
            record_phases: false,
            track_strain_contacts: false,
            solver: SolverParams::default(),
            circuit: CircuitSpec::None,
            geometry: GeometrySpec::StraightChannel(ChannelSpec::default()),
            seeds: Vec::new(),
            interventions: Vec::new(),
        }
    }
}

fn check(ok: bool, field: &str, reason: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(field, reason))
    }
}

fn probability(v: f64, field: &str) -> Result<(), ConfigError> {
    check((0.0..=1.0).contains(&v), field, "must lie in [0, 1]")
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn growth(&self) -> GrowthParams {
        GrowthParams {
            width: self.width,
            length: self.length,
            growth_speed: self.growth_speed,
            max_overlap: self.max_overlap,
            cell_infancy: self.cell_infancy,
            gt: self.gt,
            real_gt: self.real_gt,
            bac_mass: self.bac_mass,
            bac_friction: self.bac_friction,
            division_jitter: self.division_jitter,
            pause_elongation_while_conjugating: self.pause_elongation_while_conjugating,
            defer_division_while_conjugating: self.defer_division_while_conjugating,
        }
    }

    pub fn conjugation(&self) -> ConjugationParams {
        ConjugationParams {
            p_d: self.p_d,
            p_t1: self.p_t1,
            p_t2: self.p_t2,
            c_time: self.c_time,
            infancy_iterations: self.growth().infancy_iterations(),
            contact_radius: self.contact_radius,
            transconjugants_conjugate: self.transconjugants_conjugate,
            transconjugants_receive: self.transconjugants_receive,
            trial_mode: self.trial_mode,
            lifetime_trials: self.width * self.length,
            gt: self.gt,
            spring_rest_length: self.spring_rest_length,
            spring_stiffness: self.spring_stiffness,
            spring_damping: self.spring_damping,
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        check(finite_pos(self.duration_min), "duration_min", "must be positive")?;
        check(self.snapshot_every >= 1, "snapshot_every", "must be at least 1")?;
        check(finite_pos(self.width), "width", "must be positive")?;
        check(finite_pos(self.length), "length", "must be positive")?;
        check(self.growth_speed >= 1, "growth_speed", "must be at least 1")?;
        check(self.gt >= 1, "Gt", "must be at least 1")?;
        check(self.growth_speed <= self.gt, "growth_speed", "must not exceed Gt")?;
        check(finite_pos(self.real_gt), "real_Gt", "must be positive")?;
        check(finite_nonneg(self.max_overlap), "max_overlap", "must be non-negative")?;
        check((0.0..=1.0).contains(&self.cell_infancy), "cell_infancy", "must lie in [0, 1]")?;
        check(finite_pos(self.bac_mass), "bac_mass", "must be positive")?;
        check(finite_nonneg(self.bac_friction), "bac_friction", "must be non-negative")?;
        check(finite_nonneg(self.division_jitter), "division_jitter", "must be non-negative")?;
        probability(self.p_d, "p_d")?;
        probability(self.p_t1, "p_t1")?;
        probability(self.p_t2, "p_t2")?;
        check(self.c_time >= 1, "c_time", "must be at least 1")?;
        check(finite_nonneg(self.contact_radius), "contact_radius", "must be non-negative")?;
        check(finite_nonneg(self.spring_rest_length), "spring_rest_length", "must be non-negative")?;
        check(finite_nonneg(self.spring_stiffness), "spring_stiffness", "must be non-negative")?;
        check(finite_nonneg(self.spring_damping), "spring_damping", "must be non-negative")?;
        check(self.population_cap >= 1, "population_cap", "must be at least 1")?;
        if let Some([w, h]) = self.screenview {
            check(finite_pos(w) && finite_pos(h), "screenview", "both sides must be positive")?;
        }
        self.solver.validate().map_err(|e| match e {
            crate::physics::PhysicsError::InvalidParams { field, reason } => invalid(format!("solver.{field}"), reason),
            other => invalid("solver", other.to_string()),
        })?;
        if let CircuitSpec::Oscillator(p) = &self.circuit {
            p.validate().map_err(|e| match e {
                crate::circuit::CircuitError::InvalidParams { field, reason } => invalid(format!("circuit.{field}"), reason),
                other => invalid("circuit", other.to_string()),
            })?;
        }
        self.geometry.validate().map_err(|(f, r)| invalid(f, r))?;
        for (k, i) in self.interventions.iter().enumerate() {
            check(
                i.at_minutes.is_finite() && i.at_minutes >= 0.0,
                &format!("interventions[{k}].at_minutes"),
                "must be non-negative",
            )?;
        }
        Ok(())
    }

    /// Validate and resolve into a runnable scenario.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        self.validate()?;
        let mut geometry = self.geometry.build();
        if let Some([w, h]) = self.screenview {
            let c = geometry.bounds.center();
            geometry.bounds = Rect::from_corners(c - Vec2::new(0.5 * w, 0.5 * h), c + Vec2::new(0.5 * w, 0.5 * h));
        }
        geometry.validate().map_err(|r| invalid("screenview", r))?;
        let mut seeds = Vec::with_capacity(self.seeds.len());
        for (k, s) in self.seeds.iter().enumerate() {
            let mut s = s.clone();
            let field = |name: &str| format!("seeds[{k}].{name}");
            if s.role == Role::Transconjugant {
                return Err(invalid(field("role"), "founders must be donors or recipients"));
            }
            if s.arrangement == Arrangement::Explicit {
                check(!s.poses.is_empty(), &field("poses"), "explicit arrangement needs poses")?;
                for p in &s.poses {
                    check(geometry.bounds.contains(p.center), &field("poses"), "pose lies outside the world")?;
                }
            } else {
                check(s.poses.is_empty(), &field("poses"), "poses require the explicit arrangement")?;
            }
            let count = s.count.unwrap_or(match s.role {
                Role::Donor => self.number_donors,
                _ => self.number_recipients,
            });
            s.count = Some(count);
            let region = s.region.unwrap_or(geometry.growth_regions[0]);
            check(region.area() > 0.0, &field("region"), "must have positive area")?;
            check(geometry.bounds.contains_rect(&region), &field("region"), "must lie inside the world")?;
            s.region = Some(region);
            seeds.push(s);
        }
        let mut circuit = self.circuit.clone();
        if let CircuitSpec::Oscillator(p) = &mut circuit {
            p.network_steps = self.network_steps;
        }
        Ok(Scenario {
            name: self.name.clone(),
            geometry_spec: self.geometry.clone(),
            geometry,
            seeds,
            params: SimParams {
                growth: self.growth(),
                conjugation: self.conjugation(),
                solver: self.solver.clone(),
                circuit,
                population_cap: self.population_cap,
                relaxation_iterations: self.relaxation_iterations,
                record_phases: self.record_phases,
                track_strain_contacts: self.track_strain_contacts,
            },
            interventions: self.interventions.clone(),
            duration_min: self.duration_min,
            rng_seed: self.seed,
            snapshot_every: self.snapshot_every,
        })
    }
}

/// Resolve a preset name, a geometry name, or a full config document.
pub fn build_scenario(source: ScenarioSource<'_>) -> Result<Scenario, ConfigError> {
    match source {
        ScenarioSource::Preset(name) => super::presets::preset(name)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?
            .to_scenario(),
        ScenarioSource::Toml(text) => ScenarioConfig::from_toml(text)?.to_scenario(),
        ScenarioSource::Config(c) => c.to_scenario(),
    }
}

pub enum ScenarioSource<'a> {
    Preset(&'a str),
    Toml(&'a str),
    Config(&'a ScenarioConfig),
}

/// A seed spread uniformly over the first growth region.
pub fn uniform_seed(role: Role, strain: u32) -> StrainSeed {
    StrainSeed {
        role,
        strain,
        count: None,
        region: None,
        arrangement: Arrangement::Uniform,
        angle: None,
        poses: Vec::new(),
        program_initial: None,
    }
}
