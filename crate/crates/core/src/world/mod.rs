//! Scenario assembly and the per-iteration simulation loop.

pub mod config;
pub mod geometry;
pub mod presets;
pub mod run;
pub mod scenario;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{pressures, ready_to_divide, try_divide, try_elongate, Cell, CellId, IdSource, Role};
use crate::circuit::{step_program, CircuitError, Program, ProgramClock, ProgramState};
use crate::conjugation::{
    abort_all, apply_transfer, choose_mate, conjugation_probability, connect, prune_springs, step_springs, AbortReason,
    ConjugationError, PilusSpring, SpringOutcome,
};
use crate::physics::{segment_gap, surface_distance, CapsuleBody, DampedSpring, PhysicsError, Rect, Solver, SpatialGrid, Vec2, Wall};

pub use geometry::{GeometrySpec, WorldGeometry};
pub use scenario::{Arrangement, CircuitSpec, Intervention, InterventionKind, Pose, Scenario, SimParams, StrainSeed};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("physics failure at iteration {iteration}: {source}")]
    Physics {
        iteration: u64,
        #[source]
        source: PhysicsError,
    },
    #[error("program failure at iteration {iteration}: {source}")]
    Circuit {
        iteration: u64,
        #[source]
        source: CircuitError,
    },
    #[error("conjugation bookkeeping failure at iteration {iteration}: {source}")]
    Conjugation {
        iteration: u64,
        #[source]
        source: ConjugationError,
    },
}

/// The stages of one iteration, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Springs,
    Division,
    Elongation,
    Conjugation,
    Program,
    Physics,
    Washout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Phase {
        iteration: u64,
        phase: Phase,
    },
    Division {
        iteration: u64,
        mother: CellId,
        daughters: [CellId; 2],
    },
    SpringCreated {
        iteration: u64,
        spring: u64,
        giver: CellId,
        receiver: CellId,
    },
    Transfer {
        iteration: u64,
        spring: u64,
        giver: CellId,
        receiver: CellId,
        giver_role: Role,
        created_at: u64,
    },
    SpringAborted {
        iteration: u64,
        spring: u64,
        giver: CellId,
        receiver: CellId,
        reason: AbortReason,
    },
    Washout {
        iteration: u64,
        cell: CellId,
        role: Role,
    },
    ManualMix {
        iteration: u64,
    },
}

impl Event {
    pub fn iteration(&self) -> u64 {
        match self {
            Event::Phase { iteration, .. }
            | Event::Division { iteration, .. }
            | Event::SpringCreated { iteration, .. }
            | Event::Transfer { iteration, .. }
            | Event::SpringAborted { iteration, .. }
            | Event::Washout { iteration, .. }
            | Event::ManualMix { iteration } => *iteration,
        }
    }
}

/// Running counters over a whole run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub divisions: u64,
    pub washouts: u64,
    pub springs_created: u64,
    pub springs_aborted: u64,
    pub transfers: u64,
    /// Cell-iterations with a non-zero conjugation probability.
    pub trials: u64,
    pub successful_trials: u64,
    pub manual_mixes: u64,
    pub first_transfer_iteration: Option<u64>,
}

/// Live simulation state.
#[derive(Debug)]
pub struct World {
    pub name: String,
    pub geometry: WorldGeometry,
    pub params: SimParams,
    /// Sorted by id at all times.
    pub cells: Vec<Cell>,
    pub springs: Vec<PilusSpring>,
    pub iteration: u64,
    /// Events of the latest iteration.
    pub events: Vec<Event>,
    pub totals: Totals,
    /// Iterations during which cells of two different strains were within
    /// mating range, summed over such pairs. Keys are ordered strain pairs.
    pub strain_contacts: BTreeMap<(u32, u32), u64>,
    walls: Vec<Wall>,
    rng: ChaCha8Rng,
    ids: IdSource,
    next_spring: u64,
    solver: Solver,
    program: Arc<dyn Program>,
    clock: ProgramClock,
    interventions: Vec<(u64, InterventionKind)>,
    next_intervention: usize,
    bodies: Vec<CapsuleBody>,
    grid: SpatialGrid,
}

fn index_of(cells: &[Cell], id: CellId) -> Option<usize> {
    cells.binary_search_by_key(&id, |c| c.id).ok()
}

/// Mutable references to two distinct elements.
fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (a, b) = v.split_at_mut(j);
        (&mut a[i], &mut b[0])
    } else {
        let (a, b) = v.split_at_mut(i);
        (&mut b[0], &mut a[j])
    }
}

impl World {
    /// Build the initial population for `scenario`. Replicates draw from
    /// independent streams of the scenario seed.
    pub fn new(scenario: &Scenario, replicate: u64) -> World {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);
        rng.set_stream(replicate);
        let params = scenario.params.clone();
        let program = params.circuit.program();
        let mut world = World {
            name: scenario.name.clone(),
            walls: scenario.geometry.all_walls(),
            geometry: scenario.geometry.clone(),
            clock: params.clock(),
            solver: Solver::new(params.solver.clone()),
            params,
            cells: Vec::new(),
            springs: Vec::new(),
            iteration: 0,
            events: Vec::new(),
            totals: Totals::default(),
            strain_contacts: BTreeMap::new(),
            rng,
            ids: IdSource::starting_at(0),
            next_spring: 0,
            program,
            interventions: scenario.intervention_iterations(),
            next_intervention: 0,
            bodies: Vec::new(),
            grid: SpatialGrid::new(),
        };
        for seed in &scenario.seeds {
            world.seed(seed);
        }
        world
    }

    pub fn program(&self) -> &dyn Program {
        self.program.as_ref()
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Population counts by role: donors, recipients, transconjugants.
    pub fn counts(&self) -> [usize; 3] {
        let mut n = [0; 3];
        for c in &self.cells {
            n[c.role as usize] += 1;
        }
        n
    }

    pub fn cell(&self, id: CellId) -> Option<&Cell> {
        index_of(&self.cells, id).map(|i| &self.cells[i])
    }

    pub fn minutes(&self) -> f64 {
        crate::cells::minutes(self.iteration, &self.params.growth)
    }

    /// Insert a cell with a fresh id. Keeps the population sorted.
    pub fn add_cell(&mut self, role: Role, strain: u32, center: Vec2, angle: f64) -> CellId {
        let body = self.params.growth.new_body(center, angle);
        let program = if role == Role::Recipient {
            ProgramState::empty()
        } else {
            self.program.initial_state()
        };
        let id = self.ids.next_id();
        let mut cell = Cell::new(id, strain, role, body, program);
        if role == Role::Transconjugant {
            cell.partner_role = Some(Role::Donor);
        }
        self.cells.push(cell);
        id
    }

    fn seed(&mut self, seed: &StrainSeed) {
        let g = self.params.growth.clone();
        let region = seed.region.unwrap_or(self.geometry.growth_regions[0]);
        let count = if seed.arrangement == Arrangement::Explicit {
            seed.poses.len()
        } else {
            seed.count.unwrap_or(0)
        };
        let footprint = crate::physics::capsule_area(g.birth_half_length(), g.radius());
        let disc = (count as f64 * footprint / (0.5 * PI)).sqrt().min(0.5 * region.width().min(region.height()));
        for k in 0..count {
            let pose = if seed.arrangement == Arrangement::Explicit {
                seed.poses[k]
            } else {
                self.sample_pose(seed, &region, disc)
            };
            let id = self.add_cell(seed.role, seed.strain, pose.center, pose.angle);
            let phase = self.rng.random_range(0..g.growth_speed.max(1) as u64);
            let cell = self.cells.last_mut().expect("just added");
            debug_assert_eq!(cell.id, id);
            cell.growth_clock = phase;
            if let Some(init) = &seed.program_initial {
                if cell.plasmid {
                    cell.program = ProgramState::new(init.clone());
                }
            }
        }
    }

    fn sample_pose(&mut self, seed: &StrainSeed, region: &Rect, disc: f64) -> Pose {
        let g = &self.params.growth;
        let mut last = None;
        for _ in 0..200 {
            let center = match seed.arrangement {
                Arrangement::Uniform | Arrangement::Explicit => {
                    Vec2::new(self.rng.random_range(region.min.x..=region.max.x), self.rng.random_range(region.min.y..=region.max.y))
                }
                Arrangement::CenterWeighted => {
                    let tri = 0.5 * (self.rng.random::<f64>() + self.rng.random::<f64>());
                    let across = self.rng.random::<f64>();
                    if region.width() >= region.height() {
                        Vec2::new(region.min.x + tri * region.width(), region.min.y + across * region.height())
                    } else {
                        Vec2::new(region.min.x + across * region.width(), region.min.y + tri * region.height())
                    }
                }
                Arrangement::Centered => {
                    let r = disc * self.rng.random::<f64>().sqrt();
                    let t = 2.0 * PI * self.rng.random::<f64>();
                    region.center() + Vec2::from_angle(t) * r
                }
            };
            let angle = match seed.angle {
                Some(a) => a,
                None => PI * self.rng.random::<f64>(),
            };
            let body = g.new_body(center, angle);
            let reach = body.bounding_radius();
            let free = self
                .cells
                .iter()
                .all(|c| c.body.center.distance(center) >= c.body.bounding_radius() + reach || surface_distance(&c.body, &body) >= 0.0)
                && self.walls.iter().all(|w| crate::physics::capsule_wall(0, &body, 0, w).is_none());
            last = Some(Pose { center, angle });
            if free {
                break;
            }
        }
        last.expect("at least one attempt")
    }

    fn phase(&mut self, phase: Phase) {
        if self.params.record_phases {
            self.events.push(Event::Phase {
                iteration: self.iteration,
                phase,
            });
        }
    }

    fn record_outcomes(&mut self, outcomes: Vec<SpringOutcome>) -> Result<(), WorldError> {
        for o in outcomes {
            match o {
                SpringOutcome::Completed(t) => {
                    apply_transfer(&t, &mut self.cells, self.program.as_ref(), &self.params.conjugation).map_err(|source| {
                        WorldError::Conjugation {
                            iteration: self.iteration,
                            source,
                        }
                    })?;
                    self.totals.transfers += 1;
                    self.totals.first_transfer_iteration.get_or_insert(self.iteration);
                    self.events.push(Event::Transfer {
                        iteration: self.iteration,
                        spring: t.spring,
                        giver: t.giver,
                        receiver: t.receiver,
                        giver_role: t.giver_role,
                        created_at: t.created_at,
                    });
                }
                SpringOutcome::Aborted { spring, reason } => {
                    self.totals.springs_aborted += 1;
                    self.events.push(Event::SpringAborted {
                        iteration: self.iteration,
                        spring: spring.id,
                        giver: spring.giver,
                        receiver: spring.receiver,
                        reason,
                    });
                }
            }
        }
        Ok(())
    }

    /// Advance one iteration.
    pub fn step(&mut self) -> Result<(), WorldError> {
        self.events.clear();
        while let Some(&(at, kind)) = self.interventions.get(self.next_intervention) {
            if at > self.iteration {
                break;
            }
            self.next_intervention += 1;
            match kind {
                InterventionKind::ManualMix => self.manual_mix()?,
            }
        }

        self.phase(Phase::Springs);
        let outcomes = step_springs(&mut self.springs, &mut self.cells);
        self.record_outcomes(outcomes)?;

        self.phase(Phase::Division);
        self.divide()?;

        self.phase(Phase::Elongation);
        let growth = &self.params.growth;
        for c in self.cells.iter_mut() {
            c.age += 1;
            let p = c.pressure;
            try_elongate(c, growth, p);
        }

        self.phase(Phase::Conjugation);
        self.conjugate();

        self.phase(Phase::Program);
        if self.clock.network_steps > 0 {
            for c in self.cells.iter_mut() {
                step_program(c, self.program.as_ref(), &self.clock, &mut self.rng).map_err(|source| WorldError::Circuit {
                    iteration: self.iteration,
                    source,
                })?;
            }
        }

        self.phase(Phase::Physics);
        self.physics(true)?;

        self.phase(Phase::Washout);
        self.washout()?;

        self.iteration += 1;
        Ok(())
    }

    fn divide(&mut self) -> Result<(), WorldError> {
        let g = self.params.growth.clone();
        let jitter = if g.division_jitter > 0.0 {
            Some(Normal::new(0.0, g.division_jitter).expect("validated jitter"))
        } else {
            None
        };
        let mut kept = Vec::with_capacity(self.cells.len() + 8);
        let mut born = Vec::new();
        let cells = std::mem::take(&mut self.cells);
        for cell in cells {
            let blocked = cell.conjugating && g.defer_division_while_conjugating;
            if !ready_to_divide(&cell, &g) || blocked {
                kept.push(cell);
                continue;
            }
            let dtheta = match &jitter {
                Some(n) => [n.sample(&mut self.rng), n.sample(&mut self.rng)],
                None => [0.0, 0.0],
            };
            let (a, b) = try_divide(&cell, &mut self.ids, &g, dtheta).expect("checked readiness");
            self.totals.divisions += 1;
            self.events.push(Event::Division {
                iteration: self.iteration,
                mother: cell.id,
                daughters: [a.id, b.id],
            });
            born.push(a);
            born.push(b);
        }
        kept.extend(born);
        self.cells = kept;
        let outcomes = prune_springs(&mut self.springs, &mut self.cells);
        self.record_outcomes(outcomes)
    }

    fn conjugate(&mut self) {
        let params = self.params.conjugation.clone();
        let mut choices: Vec<(usize, CellId)> = Vec::new();
        let mut grid_ready = false;
        let mut max_reach = 0.0;
        let mut near = Vec::new();
        for i in 0..self.cells.len() {
            let p = conjugation_probability(&self.cells[i], &params);
            if p <= 0.0 {
                continue;
            }
            self.totals.trials += 1;
            if self.rng.random::<f64>() >= p {
                continue;
            }
            self.totals.successful_trials += 1;
            if !grid_ready {
                max_reach = self.cells.iter().map(|c| c.body.bounding_radius()).fold(0.0, f64::max);
                let cell = 2.0 * max_reach + params.contact_radius;
                self.grid.rebuild(self.cells.iter().map(|c| c.body.center), cell);
                grid_ready = true;
            }
            let me = &self.cells[i];
            near.clear();
            let reach = me.body.bounding_radius() + max_reach + params.contact_radius;
            self.grid.for_each_near(me.body.center, reach, |j| {
                if j != i {
                    near.push(j);
                }
            });
            near.sort_unstable();
            let cells = &self.cells;
            if let Some(mate) = choose_mate(me, near.iter().map(|&j| &cells[j]), &mut self.rng, &params) {
                choices.push((i, mate));
            }
        }
        for (gi, mate) in choices {
            let ri = index_of(&self.cells, mate).expect("mate exists");
            if self.cells[gi].conjugating || self.cells[ri].conjugating {
                continue;
            }
            let id = self.next_spring;
            self.next_spring += 1;
            let (giver, receiver) = pair_mut(&mut self.cells, gi, ri);
            let spring = connect(id, giver, receiver, self.iteration, &params);
            self.totals.springs_created += 1;
            self.events.push(Event::SpringCreated {
                iteration: self.iteration,
                spring: id,
                giver: spring.giver,
                receiver: spring.receiver,
            });
            self.springs.push(spring);
        }
    }

    fn physics(&mut self, full: bool) -> Result<(), WorldError> {
        self.bodies.clear();
        self.bodies.extend(self.cells.iter().map(|c| c.body.clone()));
        let springs: Vec<DampedSpring> = if full {
            self.springs
                .iter()
                .map(|s| {
                    let a = index_of(&self.cells, s.giver).expect("live spring");
                    let b = index_of(&self.cells, s.receiver).expect("live spring");
                    s.damped(a, &self.cells[a], b, &self.cells[b])
                })
                .collect()
        } else {
            Vec::new()
        };
        let flows = if full { &self.geometry.flow_fields[..] } else { &[] };
        for _ in 0..self.params.solver.substeps_per_iteration {
            self.solver
                .solve_step(&mut self.bodies, &self.walls, &springs, flows)
                .map_err(|source| WorldError::Physics {
                    iteration: self.iteration,
                    source,
                })?;
        }
        self.solver.refresh_contacts(&self.bodies, &self.walls);
        let press = pressures(self.bodies.len(), self.solver.contacts());
        for ((c, b), p) in self.cells.iter_mut().zip(self.bodies.drain(..)).zip(press) {
            c.body = b;
            c.pressure = p;
        }
        if full && self.params.track_strain_contacts {
            self.count_strain_contacts();
        }
        Ok(())
    }

    fn count_strain_contacts(&mut self) {
        let Some(first) = self.cells.first().map(|c| c.strain) else {
            return;
        };
        if self.cells.iter().all(|c| c.strain == first) {
            return;
        }
        let range = self.params.conjugation.contact_radius;
        let max_reach = self.cells.iter().map(|c| c.body.bounding_radius()).fold(0.0, f64::max);
        self.grid.rebuild(self.cells.iter().map(|c| c.body.center), 2.0 * max_reach + range);
        let segs: Vec<_> = self.cells.iter().map(|c| c.body.segment()).collect();
        let mut near = Vec::new();
        for (i, a) in self.cells.iter().enumerate() {
            near.clear();
            self.grid.for_each_near(a.body.center, a.body.bounding_radius() + max_reach + range, |j| {
                if j > i {
                    near.push(j);
                }
            });
            near.sort_unstable();
            for &j in &near {
                let b = &self.cells[j];
                if a.strain != b.strain && segment_gap(segs[i], a.body.radius, segs[j], b.body.radius) <= range {
                    let key = (a.strain.min(b.strain), a.strain.max(b.strain));
                    *self.strain_contacts.entry(key).or_insert(0) += 1;
                }
            }
        }
    }

    fn washout(&mut self) -> Result<(), WorldError> {
        let geometry = &self.geometry;
        let iteration = self.iteration;
        let mut gone = Vec::new();
        self.cells.retain(|c| {
            let out = geometry.in_washout(&c.body.aabb()) || !geometry.bounds.contains(c.body.center);
            if out {
                gone.push(Event::Washout {
                    iteration,
                    cell: c.id,
                    role: c.role,
                });
            }
            !out
        });
        self.totals.washouts += gone.len() as u64;
        self.events.extend(gone);
        let outcomes = prune_springs(&mut self.springs, &mut self.cells);
        self.record_outcomes(outcomes)
    }

    /// Scatter every cell uniformly over the growth regions with a uniform
    /// random orientation, abort all pili, then relax overlaps with
    /// physics-only iterations.
    pub fn manual_mix(&mut self) -> Result<(), WorldError> {
        let outcomes = abort_all(&mut self.springs, &mut self.cells, AbortReason::Mixed);
        self.record_outcomes(outcomes)?;
        let regions = self.geometry.growth_regions.clone();
        let total: f64 = regions.iter().map(Rect::area).sum();
        for i in 0..self.cells.len() {
            let mut pick = self.rng.random::<f64>() * total;
            let mut region = regions[regions.len() - 1];
            for r in &regions {
                if pick < r.area() {
                    region = *r;
                    break;
                }
                pick -= r.area();
            }
            let c = &mut self.cells[i];
            let inset = c.body.radius.min(0.5 * region.width().min(region.height()));
            let x = self.rng.random_range(region.min.x + inset..=region.max.x - inset);
            let y = self.rng.random_range(region.min.y + inset..=region.max.y - inset);
            c.body.center = Vec2::new(x, y);
            c.body.angle = 2.0 * PI * self.rng.random::<f64>();
            c.body.linear_velocity = Vec2::ZERO;
            c.body.angular_velocity = 0.0;
        }
        for _ in 0..self.params.relaxation_iterations {
            self.physics(false)?;
        }
        for c in self.cells.iter_mut() {
            c.body.linear_velocity = Vec2::ZERO;
            c.body.angular_velocity = 0.0;
        }
        self.totals.manual_mixes += 1;
        self.events.push(Event::ManualMix { iteration: self.iteration });
        self.washout()
    }
}
